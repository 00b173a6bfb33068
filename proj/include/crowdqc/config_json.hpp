#pragma once

#include <json.hpp>

#include "crowdqc/config.hpp"

namespace crowdqc {

using ordered_json = nlohmann::ordered_json;

/// Canonical JSON tree of a config (the same tree serialize_config dumps).
ordered_json config_to_json(const TaskConfig& config);

/// Strict conversion from an already-parsed JSON value. Same error contract as
/// parse_config.
TaskConfig config_from_json(const nlohmann::json& document);

}  // namespace crowdqc
