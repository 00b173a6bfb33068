#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace crowdqc {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "crowdqc-data";
  std::int64_t lease_minutes = 60;

  bool operator==(const ServerConfig&) const = default;
};

/// Reads an optional JSON file {host, port, data_dir, lease_minutes}, then
/// applies CROWDQC_HOST, CROWDQC_PORT, CROWDQC_DATA_DIR and
/// CROWDQC_LEASE_MINUTES from `env`. Throws Error(malformed_document) or
/// Error(invalid_config).
ServerConfig load_server_config(const std::optional<std::filesystem::path>& file,
                                const std::map<std::string, std::string>& env);

/// The process environment restricted to the CROWDQC_* variables.
std::map<std::string, std::string> server_environment();

}  // namespace crowdqc
