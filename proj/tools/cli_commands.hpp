#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace crowdqc::cli {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

int cmd_validate(const std::filesystem::path& config_path, bool as_json, std::ostream& out, std::ostream& err);

/// `seed` overrides qc.shuffle_seed for the unit build.
int cmd_plan(const std::filesystem::path& config_path, const std::filesystem::path& items_path,
             std::optional<std::uint64_t> seed, bool as_json, std::ostream& out, std::ostream& err);

/// Prints Markdown (or JSON with `as_json`); `out_dir` also receives report.md
/// and report.json.
int cmd_analyze(const std::filesystem::path& export_path, const std::optional<std::filesystem::path>& out_dir,
                bool as_json, std::ostream& out, std::ostream& err);

struct ServeOverrides {
  std::optional<std::filesystem::path> config_file;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::int64_t> lease_minutes;
};

/// Blocks until SIGTERM or SIGINT. Signals must already be blocked in every
/// thread (see block_shutdown_signals).
int cmd_serve(const ServeOverrides& overrides, std::ostream& out, std::ostream& err);

void block_shutdown_signals();

}  // namespace crowdqc::cli
