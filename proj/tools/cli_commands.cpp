#include "cli_commands.hpp"

#include <signal.h>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "crowdqc/analytics.hpp"
#include "crowdqc/config.hpp"
#include "crowdqc/error.hpp"
#include "crowdqc/export.hpp"
#include "crowdqc/http_api.hpp"
#include "crowdqc/items.hpp"
#include "crowdqc/lint.hpp"
#include "crowdqc/planner.hpp"
#include "crowdqc/report_io.hpp"
#include "crowdqc/server_config.hpp"
#include "crowdqc/service.hpp"

namespace crowdqc::cli {

namespace {

using nlohmann::ordered_json;

/// Missing or unreadable input is a usage/IO failure, not a domain one.
struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw IoFailure("cannot write " + path.string());
}

void print_error(std::ostream& err, const Error& e) {
  err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
  for (const auto& d : e.details()) err << "  " << d << "\n";
}

/// Runs a command body and maps failures onto exit codes.
template <typename F>
int run(std::ostream& err, F body) {
  try {
    return body();
  } catch (const IoFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    print_error(err, e);
    return e.code() == ErrorCode::storage ? kExitUsage : kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

int cmd_validate(const std::filesystem::path& config_path, bool as_json, std::ostream& out, std::ostream& err) {
  return run(err, [&] {
    auto text = read_file(config_path);
    TaskConfig config;
    try {
      config = parse_config(text);
    } catch (const Error& e) {
      if (as_json) {
        ordered_json j = ordered_json::object();
        j["valid"] = false;
        j["error"] = std::string(to_string(e.code()));
        j["message"] = e.what();
        j["violations"] = e.details();
        j["findings"] = ordered_json::array();
        out << j.dump(2) << "\n";
      } else {
        print_error(err, e);
      }
      return kExitDomain;
    }
    auto report = lint_clarity(config);
    if (as_json) {
      ordered_json j = ordered_json::object();
      j["valid"] = !report.has_errors();
      j["violations"] = ordered_json::array();
      j["findings"] = lint_to_json(report);
      out << j.dump(2) << "\n";
    } else {
      for (const auto& f : report.findings) {
        out << to_string(f.severity) << " " << f.code << ": " << f.message << "\n";
      }
      out << (report.has_errors() ? "invalid" : "ok") << "\n";
    }
    return report.has_errors() ? kExitDomain : kExitOk;
  });
}

int cmd_plan(const std::filesystem::path& config_path, const std::filesystem::path& items_path,
             std::optional<std::uint64_t> seed, bool as_json, std::ostream& out, std::ostream& err) {
  return run(err, [&] {
    auto config = parse_config(read_file(config_path));
    auto payload = read_file(items_path);
    auto ext = items_path.extension().string();
    auto format = (ext == ".csv" || ext == ".CSV") ? UploadFormat::csv : UploadFormat::json;
    auto upload = parse_item_upload(payload, format, config, false, {}, 1);
    for (const auto& r : upload.rejected) err << "warning: row " << r.row << " rejected: " << r.reason << "\n";
    if (upload.items.empty()) throw Error(ErrorCode::empty_items, "no usable items in " + items_path.string());

    auto plan = plan_deployment(static_cast<std::int64_t>(upload.items.size()), config.qc, config.payment);
    // Units are built only to record the seed and any shortfall; golden items
    // are not part of the plan inputs, so golden slots are left out here.
    auto qc = config.qc;
    if (seed) qc.shuffle_seed = seed;
    const bool golden_skipped = qc.golden_per_unit > 0;
    qc.golden_per_unit = 0;
    std::optional<UnitBuild> build;
    if (qc.duplicates_per_unit == 0 || qc.items_per_unit >= 2 * qc.duplicates_per_unit + 1) {
      auto full = build_units(upload.items, {}, qc);
      full.units.clear();
      build = std::move(full);
    }

    if (as_json) {
      ordered_json j = ordered_json::object();
      j["items"] = upload.items.size();
      j["plan"] = plan_to_json(plan);
      j["seed"] = build ? ordered_json(build->seed) : ordered_json(nullptr);
      out << j.dump(2) << "\n";
      return kExitOk;
    }
    auto row = [&](const std::string& k, const std::string& v) { out << pad(k, 34) << v << "\n"; };
    row("items", std::to_string(upload.items.size()));
    row("fresh items per unit", std::to_string(plan.fresh_per_unit));
    row("total units", std::to_string(plan.total_units));
    row("total tasks", std::to_string(plan.total_tasks));
    row("suggested payment (cents/unit)", std::to_string(plan.suggested_payment_cents_per_unit));
    row("total budget (cents)", std::to_string(plan.total_budget_cents));
    if (build) row("shuffle seed", std::to_string(build->seed));
    if (golden_skipped) out << "golden slots are filled at launch from the uploaded golden pool\n";
    return kExitOk;
  });
}

int cmd_analyze(const std::filesystem::path& export_path, const std::optional<std::filesystem::path>& out_dir,
                bool as_json, std::ostream& out, std::ostream& err) {
  return run(err, [&] {
    auto exported = parse_export(read_file(export_path));
    auto report = build_report(exported.data);
    auto json_text = report_json_text(report);
    auto md_text = report_to_markdown(report);
    if (out_dir) {
      std::error_code ec;
      std::filesystem::create_directories(*out_dir, ec);
      if (ec) throw IoFailure("cannot create " + out_dir->string() + ": " + ec.message());
      write_file(*out_dir / "report.json", json_text);
      write_file(*out_dir / "report.md", md_text);
    }
    out << (as_json ? json_text : md_text);
    return kExitOk;
  });
}

void block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGINT);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

int cmd_serve(const ServeOverrides& overrides, std::ostream& out, std::ostream& err) {
  return run(err, [&] {
    auto cfg = load_server_config(overrides.config_file, server_environment());
    if (overrides.host) cfg.host = *overrides.host;
    if (overrides.port) cfg.port = *overrides.port;
    if (overrides.data_dir) cfg.data_dir = *overrides.data_dir;
    if (overrides.lease_minutes) cfg.lease_minutes = *overrides.lease_minutes;

    ServiceOptions opts;
    opts.data_dir = cfg.data_dir;
    opts.lease = std::chrono::minutes(cfg.lease_minutes);
    Service service(std::move(opts));
    HttpServer server(service);
    if (!server.bind(cfg.host, cfg.port)) {
      err << "error: port-in-use: cannot bind " << cfg.host << ":" << cfg.port << "\n";
      return kExitDomain;
    }
    out << "listening on " << cfg.host << ":" << server.port() << "\n" << std::flush;

    std::thread waiter([&server] {
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGTERM);
      sigaddset(&set, SIGINT);
      int sig = 0;
      sigwait(&set, &sig);
      server.wait_until_ready();
      server.stop();
    });
    server.listen();
    if (waiter.joinable()) waiter.join();
    out << "stopped\n" << std::flush;
    return kExitOk;
  });
}

}  // namespace crowdqc::cli
