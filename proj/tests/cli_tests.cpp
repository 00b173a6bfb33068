#include <doctest.h>

#include <httplib.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crowdqc/config_json.hpp"
#include "crowdqc/error.hpp"
#include "crowdqc/server_config.hpp"
#include "crowdqc/service.hpp"
#include "process.hpp"

using namespace crowdqc;
using crowdqc::testing::ChildProcess;
using crowdqc::testing::run_process;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = CROWDQC_CLI;
const std::string kData = CROWDQC_TEST_DATA;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

/// Export of a small intent project; `units_done` units are answered by three workers.
std::string sample_export(int units_done) {
  std::int64_t now = 1'700'000'000'000;
  Service svc(ServiceOptions{{}, std::chrono::minutes(60), std::chrono::milliseconds(1000), [&now] { return now; }});
  auto id = svc.create_project(config_from_json(json::parse(read_file(kData + "/intent_config.json")))).project_id;
  svc.upload_items(id, read_file(kData + "/intent_items.json"), UploadFormat::json, false);
  svc.upload_items(id, R"([{"text":"table for two","expected_answer":"book_table"},
                           {"text":"open late?","expected_answer":"opening_hours"}])",
                   UploadFormat::json, true);
  svc.launch(id, LaunchMode::full);
  static const char* labels[] = {"book_table", "opening_hours", "menu_question", "delivery"};
  for (int u = 0; u < units_done; ++u) {
    for (int w = 0; w < 3; ++w) {
      std::string worker = "worker-" + std::to_string(w);
      auto view = svc.claim_next_unit(id, worker);
      SubmitRequest r;
      r.worker_id = worker;
      r.unit_id = view.unit_id;
      r.answers = json::array();
      for (const auto& item : view.items) {
        r.answers.push_back({{"position", item.position}, {"choice", labels[(item.position + w * (u % 2)) % 4]}});
      }
      r.consent_acknowledged = true;
      now += 60000 + 1000 * w;
      svc.submit(id, r);
    }
  }
  return export_json(svc.export_project(id));
}

/// Reads lines until "listening on host:port" and returns the port.
int wait_for_port(ChildProcess& child) {
  for (int i = 0; i < 20; ++i) {
    auto line = child.read_line(std::chrono::seconds(10));
    if (!line) break;
    auto at = line->find("listening on ");
    if (at != std::string::npos) return std::stoi(line->substr(line->rfind(':') + 1));
  }
  FAIL("server did not report a port");
  return -1;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run_process(kCli, {}).exit_code == 2);
  CHECK(run_process(kCli, {"frobnicate"}).exit_code == 2);
  CHECK(run_process(kCli, {"validate"}).exit_code == 2);
  auto missing = run_process(kCli, {"validate", "/nonexistent/config.json"});
  CHECK(missing.exit_code == 2);
  CHECK_FALSE(missing.err.empty());
}

TEST_CASE("validate reports findings and exit status") {
  auto ok = run_process(kCli, {"validate", kData + "/intent_config.json"});
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("pilot-first") != std::string::npos);

  auto as_json = run_process(kCli, {"validate", "--json", kData + "/intent_config.json"});
  CHECK(as_json.exit_code == 0);
  CHECK(json::parse(as_json.out)["valid"] == true);

  auto dir = crowdqc::testing::make_temp_dir("crowdqc-cli");
  write_file(fs::path(dir) / "bad.json", R"({"schema":1,"template":"intent_classification","title":"t","general_instructions":"g",
      "categories":[{"name":"a"}],"payment":{"estimated_minutes_per_unit":2},"qc":{"items_per_unit":5},"oops":1})");
  auto bad = run_process(kCli, {"validate", "--json", dir + "/bad.json"});
  CHECK(bad.exit_code == 1);
  auto bj = json::parse(bad.out);
  CHECK(bj["valid"] == false);
  CHECK(bj["error"] == "unknown-field");
  auto bad_text = run_process(kCli, {"validate", dir + "/bad.json"});
  CHECK(bad_text.exit_code == 1);
  CHECK(bad_text.err.find("unknown-field") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("plan prints the deployment for the worked example") {
  auto r = run_process(kCli, {"plan", "--json", kData + "/intent_config.json", kData + "/intent_items.json"});
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.out);
  CHECK(j["items"] == 100);
  CHECK(j["plan"]["total_units"] == 13);
  CHECK(j["plan"]["total_tasks"] == 7);
  CHECK(j["plan"]["suggested_payment_cents_per_unit"] == 100);
  CHECK(j["plan"]["total_budget_cents"] == 3900);
  CHECK(j["seed"] == 42);

  auto seeded = run_process(kCli, {"plan", "--json", "--seed", "7", kData + "/intent_config.json",
                                   kData + "/intent_items.json"});
  CHECK(json::parse(seeded.out)["seed"] == 7);

  auto table = run_process(kCli, {"plan", kData + "/intent_config.json", kData + "/intent_items.json"});
  CHECK(table.exit_code == 0);
  CHECK(table.out.find("total units") != std::string::npos);
}

TEST_CASE("plan reads csv items") {
  auto dir = crowdqc::testing::make_temp_dir("crowdqc-cli");
  std::string csv = "id,text\n";
  for (int i = 0; i < 17; ++i) csv += "c" + std::to_string(i) + ",utterance " + std::to_string(i) + "\n";
  write_file(fs::path(dir) / "items.csv", csv);
  auto r = run_process(kCli, {"plan", "--json", kData + "/intent_config.json", dir + "/items.csv"});
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(r.out)["plan"]["total_units"] == 3);
  fs::remove_all(dir);
}

TEST_CASE("analyze is deterministic and writes report files") {
  auto dir = crowdqc::testing::make_temp_dir("crowdqc-cli");
  write_file(fs::path(dir) / "export.json", sample_export(4));
  auto first = run_process(kCli, {"analyze", "--json", dir + "/export.json"});
  REQUIRE(first.exit_code == 0);
  auto second = run_process(kCli, {"analyze", "--json", dir + "/export.json"});
  CHECK(first.out == second.out);
  auto report = json::parse(first.out);
  CHECK(report["submission_count"] == 12);
  CHECK(report["workers"].size() == 3);

  auto md = run_process(kCli, {"analyze", "--out", dir + "/out", dir + "/export.json"});
  REQUIRE(md.exit_code == 0);
  CHECK(read_file(fs::path(dir) / "out" / "report.json") == first.out);
  CHECK(read_file(fs::path(dir) / "out" / "report.md") == md.out);
  fs::remove_all(dir);
}

TEST_CASE("analyze refuses empty or broken exports") {
  auto dir = crowdqc::testing::make_temp_dir("crowdqc-cli");
  write_file(fs::path(dir) / "empty.json", sample_export(0));
  auto empty = run_process(kCli, {"analyze", dir + "/empty.json"});
  CHECK(empty.exit_code == 1);
  CHECK(empty.err.find("no submissions") != std::string::npos);

  write_file(fs::path(dir) / "broken.json", "{\"schema\": 1");
  auto broken = run_process(kCli, {"analyze", dir + "/broken.json"});
  CHECK(broken.exit_code == 1);
  CHECK(broken.err.find("malformed-export") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("serve answers health, refuses a taken port and stops on SIGTERM") {
  auto dir = crowdqc::testing::make_temp_dir("crowdqc-serve");
  ChildProcess server(kCli, {"serve", "--port", "0", "--data-dir", dir});
  int port = wait_for_port(server);
  REQUIRE(port > 0);

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/api/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto created = client.Post("/api/v1/projects", read_file(kData + "/intent_config.json"), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);

  auto clash = run_process(kCli, {"serve", "--port", std::to_string(port), "--data-dir", dir + "/other"});
  CHECK(clash.exit_code == 1);
  CHECK(clash.err.find("port-in-use") != std::string::npos);

  server.signal(SIGTERM);
  CHECK(server.wait() == 0);
  CHECK(server.drain().find("stopped") != std::string::npos);

  // The project is still there after a restart on the same data directory.
  ChildProcess again(kCli, {"serve", "--port", "0", "--data-dir", dir});
  int port2 = wait_for_port(again);
  httplib::Client client2("127.0.0.1", port2);
  auto list = client2.Get("/api/v1/projects");
  REQUIRE(list);
  CHECK(json::parse(list->body)["projects"] == json::array({"prj-000001"}));
  again.signal(SIGINT);
  CHECK(again.wait() == 0);
  fs::remove_all(dir);
}

TEST_CASE("serve takes its settings from a file and the environment") {
  auto dir = crowdqc::testing::make_temp_dir("crowdqc-serve");
  write_file(fs::path(dir) / "server.json", R"({"port": 0, "lease_minutes": 5})");
  ::setenv("CROWDQC_DATA_DIR", (dir + "/from-env").c_str(), 1);
  ChildProcess server(kCli, {"serve", "--config", dir + "/server.json"});
  ::unsetenv("CROWDQC_DATA_DIR");
  int port = wait_for_port(server);
  CHECK(port > 0);
  CHECK(fs::exists(fs::path(dir) / "from-env" / "crowdqc.sqlite3"));
  server.signal(SIGTERM);
  CHECK(server.wait() == 0);

  auto bad = run_process(kCli, {"serve", "--lease-minutes", "0", "--port", "0", "--data-dir", dir});
  CHECK(bad.exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("server config loading") {
  auto dir = crowdqc::testing::make_temp_dir("crowdqc-config");
  auto file = fs::path(dir) / "server.json";

  CHECK(load_server_config(std::nullopt, {}) == ServerConfig{});

  write_file(file, R"({"host":"0.0.0.0","port":9000,"data_dir":"/var/lib/crowdqc","lease_minutes":15})");
  auto cfg = load_server_config(file, {});
  CHECK(cfg.host == "0.0.0.0");
  CHECK(cfg.port == 9000);
  CHECK(cfg.data_dir == "/var/lib/crowdqc");
  CHECK(cfg.lease_minutes == 15);

  auto env = load_server_config(file, {{"CROWDQC_PORT", "9100"}, {"CROWDQC_LEASE_MINUTES", "30"}});
  CHECK(env.port == 9100);
  CHECK(env.lease_minutes == 30);
  CHECK(env.host == "0.0.0.0");

  auto code = [&](const std::map<std::string, std::string>& e) {
    try {
      load_server_config(file, e);
    } catch (const Error& err) {
      return err.code();
    }
    return ErrorCode::storage;
  };
  CHECK(code({{"CROWDQC_PORT", "70000"}}) == ErrorCode::invalid_config);
  CHECK(code({{"CROWDQC_PORT", "abc"}}) == ErrorCode::invalid_config);
  CHECK(code({{"CROWDQC_LEASE_MINUTES", "0"}}) == ErrorCode::invalid_config);

  write_file(file, R"({"port":9000,"colour":"red"})");
  CHECK(code({}) == ErrorCode::unknown_field);
  write_file(file, "{");
  CHECK(code({}) == ErrorCode::malformed_document);
  fs::remove_all(dir);
}
