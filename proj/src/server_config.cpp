#include "crowdqc/server_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "crowdqc/error.hpp"
#include "json_reader.hpp"

namespace crowdqc {

namespace {

std::int64_t parse_env_integer(const std::string& name, const std::string& value) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw Error(ErrorCode::invalid_config, name + " must be an integer, got '" + value + "'");
  }
  return v;
}

}  // namespace

ServerConfig load_server_config(const std::optional<std::filesystem::path>& file,
                                const std::map<std::string, std::string>& env) {
  ServerConfig cfg;
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw Error(ErrorCode::storage, "cannot read server config " + file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    auto doc = detail::parse_json_text(ss.str(), ErrorCode::malformed_document);
    std::vector<std::string> unknown;
    {
      detail::ObjectReader r(doc, "", &unknown);
      cfg.host = r.string_or("host", cfg.host);
      cfg.port = static_cast<int>(r.integer_or("port", cfg.port));
      cfg.data_dir = r.string_or("data_dir", cfg.data_dir.string());
      cfg.lease_minutes = r.integer_or("lease_minutes", cfg.lease_minutes);
    }
    if (!unknown.empty()) {
      throw Error(ErrorCode::unknown_field, "unknown server config field " + unknown.front(), unknown);
    }
  }
  if (auto it = env.find("CROWDQC_HOST"); it != env.end()) cfg.host = it->second;
  if (auto it = env.find("CROWDQC_PORT"); it != env.end()) {
    cfg.port = static_cast<int>(parse_env_integer(it->first, it->second));
  }
  if (auto it = env.find("CROWDQC_DATA_DIR"); it != env.end()) cfg.data_dir = it->second;
  if (auto it = env.find("CROWDQC_LEASE_MINUTES"); it != env.end()) {
    cfg.lease_minutes = parse_env_integer(it->first, it->second);
  }
  if (cfg.port < 0 || cfg.port > 65535) throw Error(ErrorCode::invalid_config, "port must be in [0, 65535]");
  if (cfg.lease_minutes < 1) throw Error(ErrorCode::invalid_config, "lease_minutes must be at least 1");
  if (cfg.host.empty()) throw Error(ErrorCode::invalid_config, "host must not be empty");
  return cfg;
}

std::map<std::string, std::string> server_environment() {
  std::map<std::string, std::string> env;
  for (const char* name : {"CROWDQC_HOST", "CROWDQC_PORT", "CROWDQC_DATA_DIR", "CROWDQC_LEASE_MINUTES"}) {
    if (const char* v = std::getenv(name)) env.emplace(name, v);
  }
  return env;
}

}  // namespace crowdqc
