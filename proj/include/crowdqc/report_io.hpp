#pragma once

#include <string>

#include <json.hpp>

#include "crowdqc/analytics.hpp"

namespace crowdqc {

nlohmann::ordered_json report_to_json(const QualityReport& report);

/// Two-space indented JSON plus trailing newline; byte-identical for equal reports.
std::string report_json_text(const QualityReport& report);

/// Human-readable data summary: per-worker table, agreement tables, label
/// distributions, durations and worker feedback.
std::string report_to_markdown(const QualityReport& report);

}  // namespace crowdqc
