#include <CLI11.hpp>

#include <iostream>

#include "cli_commands.hpp"

int main(int argc, char** argv) {
  using namespace crowdqc::cli;
  // Before any thread exists, so the serve waiter is the only receiver.
  block_shutdown_signals();

  CLI::App app{"crowdqc: crowdsourced annotation tasks with built-in quality control"};
  app.require_subcommand(1);

  bool as_json = false;
  std::string config_path;
  std::string items_path;
  std::string export_path;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto* validate = app.add_subcommand("validate", "Validate a task config and print clarity findings");
  validate->add_option("config", config_path, "Task config JSON")->required();
  validate->add_flag("--json", as_json, "Print findings as JSON");

  auto* plan = app.add_subcommand("plan", "Compute payment and deployment counts for a config and items file");
  plan->add_option("config", config_path, "Task config JSON")->required();
  plan->add_option("items", items_path, "Items as a JSON array or CSV")->required();
  plan->add_flag("--json", as_json, "Print the plan as JSON");
  auto* seed_opt = plan->add_option("--seed", seed, "Shuffle seed for the unit build");

  auto* analyze = app.add_subcommand("analyze", "Build the quality report from a project export");
  analyze->add_option("export", export_path, "Export JSON written by the server")->required();
  analyze->add_flag("--json", as_json, "Print the report as JSON instead of Markdown");
  auto* out_opt = analyze->add_option("--out", out_dir, "Directory that receives report.json and report.md");

  ServeOverrides serve_opts;
  std::string serve_config;
  std::string host;
  int port = 0;
  std::string data_dir;
  std::int64_t lease = 0;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API until SIGTERM or SIGINT");
  auto* serve_config_opt = serve->add_option("--config", serve_config, "Server config JSON");
  auto* host_opt = serve->add_option("--host", host, "Bind address");
  auto* port_opt = serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  auto* data_opt = serve->add_option("--data-dir", data_dir, "Directory for the project store");
  auto* lease_opt = serve->add_option("--lease-minutes", lease, "Claim lease length")
                        ->check(CLI::Range(std::int64_t{1}, std::int64_t{7 * 24 * 60}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (*validate) return cmd_validate(config_path, as_json, std::cout, std::cerr);
  if (*plan) {
    std::optional<std::uint64_t> s;
    if (*seed_opt) s = seed;
    return cmd_plan(config_path, items_path, s, as_json, std::cout, std::cerr);
  }
  if (*analyze) {
    std::optional<std::filesystem::path> out;
    if (*out_opt) out = out_dir;
    return cmd_analyze(export_path, out, as_json, std::cout, std::cerr);
  }
  if (*serve_config_opt) serve_opts.config_file = serve_config;
  if (*host_opt) serve_opts.host = host;
  if (*port_opt) serve_opts.port = port;
  if (*data_opt) serve_opts.data_dir = data_dir;
  if (*lease_opt) serve_opts.lease_minutes = lease;
  return cmd_serve(serve_opts, std::cout, std::cerr);
}
