#include "persona_sim.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

namespace crowdqc::testing {

namespace {

using nlohmann::json;

const std::vector<std::string> kIntents = {"book_table", "opening_hours", "menu_question", "delivery"};

enum class Persona { diligent, random, bot, slow };

struct Worker {
  std::string id;
  Persona persona;
  std::mt19937_64 rng;
  std::size_t units_left;
  bool done = false;
};

std::string worker_id(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%02d", prefix, n);
  return buf;
}

json expect_json(const httplib::Result& res, int status, const std::string& what) {
  if (!res) throw std::runtime_error(what + ": no response (" + httplib::to_string(res.error()) + ")");
  if (res->status != status) {
    throw std::runtime_error(what + ": HTTP " + std::to_string(res->status) + " " + res->body);
  }
  return json::parse(res->body);
}

std::int64_t between(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace

std::string persona_config_json() {
  json cats = json::array();
  const char* instructions[] = {"The user wants to reserve a table.", "The user asks when the restaurant is open.",
                                "The user asks about dishes or ingredients.", "The user asks about delivery."};
  for (std::size_t i = 0; i < kIntents.size(); ++i) {
    cats.push_back({{"name", kIntents[i]},
                    {"instructions", instructions[i]},
                    {"examples", {{{"text", "example for " + kIntents[i]}, {"explanation", "typical wording"}}}},
                    {"counterexamples", {{{"text", "not " + kIntents[i]}, {"explanation", "different goal"}}}}});
  }
  json config = {
      {"schema", 1},
      {"template", "intent_classification"},
      {"title", "Restaurant assistant intents"},
      {"general_instructions",
       "Read each message a customer sent to a restaurant assistant and choose the single intent that fits best. "
       "Some messages appear twice; answer each one on its own. Take your time and use the examples shown for "
       "every intent when a message is ambiguous."},
      {"categories", cats},
      {"payment", {{"estimated_minutes_per_unit", 5}, {"hourly_rate_cents", 1500}}},
      {"qc",
       {{"items_per_unit", 5},
        {"units_per_task", 2},
        {"duplicates_per_unit", 1},
        {"golden_per_unit", 1},
        {"assignments_per_unit", 40},
        {"golden_pass_threshold", 0.8},
        {"shuffle_seed", 7},
        {"pilot_unit_count", 2}}},
      {"consent", {{"consent_text", "Your answers are stored for research use."}, {"required", true}}},
      {"feedback_enabled", true}};
  return config.dump(2);
}

SimOutcome run_persona_simulation(httplib::Client& client, const SimOptions& options) {
  std::mt19937_64 rng(options.seed);
  SimOutcome outcome;
  std::int64_t clock = 1'700'000'000'000;
  auto tick = [&](std::int64_t ms) {
    clock += ms;
    if (options.set_clock) options.set_clock(clock);
  };
  tick(0);

  auto created = expect_json(client.Post("/api/v1/projects", persona_config_json(), "application/json"), 201,
                             "create project");
  outcome.project_id = created.at("project_id").get<std::string>();
  const std::string base = "/api/v1/projects/" + outcome.project_id;

  // Hidden truth for every text a worker can be shown.
  std::map<std::string, std::string> truth;
  json items = json::array();
  for (std::size_t i = 0; i < options.items; ++i) {
    std::string text = "customer message " + std::to_string(i + 1);
    truth[text] = kIntents[rng() % kIntents.size()];
    items.push_back({{"id", "msg-" + std::to_string(i + 1)}, {"text", text}});
  }
  json golden = json::array();
  for (std::size_t i = 0; i < options.golden; ++i) {
    std::string text = "checked message " + std::to_string(i + 1);
    truth[text] = kIntents[i % kIntents.size()];
    golden.push_back({{"id", "gold-" + std::to_string(i + 1)}, {"text", text}, {"expected_answer", truth[text]}});
  }
  auto up = expect_json(client.Post(base + "/items", items.dump(), "application/json"), 200, "upload items");
  if (up.at("accepted").get<std::size_t>() != options.items) throw std::runtime_error("items rejected: " + up.dump());
  up = expect_json(client.Post(base + "/golden", golden.dump(), "application/json"), 200, "upload golden");
  if (up.at("accepted").get<std::size_t>() != options.golden) throw std::runtime_error("golden rejected");
  auto launched = expect_json(client.Post(base + "/launch", R"({"mode":"full"})", "application/json"), 200, "launch");
  const auto units = launched.at("plan").at("total_units").get<std::size_t>();

  std::vector<Worker> workers;
  for (int i = 1; i <= options.diligent; ++i) {
    workers.push_back({worker_id("diligent", i), Persona::diligent, std::mt19937_64(rng()), units});
    outcome.diligent.push_back(workers.back().id);
  }
  for (int i = 1; i <= options.random; ++i) {
    workers.push_back({worker_id("random", i), Persona::random, std::mt19937_64(rng()), units});
    outcome.random.push_back(workers.back().id);
  }
  workers.push_back({"bot-01", Persona::bot, std::mt19937_64(rng()), units});
  outcome.bot = "bot-01";
  workers.push_back({"slow-01", Persona::slow, std::mt19937_64(rng()), 1});
  outcome.slow = "slow-01";

  // Round-robin over workers, one unit each per round.
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto& w : workers) {
      if (w.done || w.units_left == 0) continue;
      if (options.stop_after && outcome.accepted >= *options.stop_after) return outcome;
      tick(between(w.rng, 1000, 20000));
      auto claim = client.Post(base + "/claim?worker_id=" + w.id, "", "application/json");
      if (claim && claim->status == 409) {
        w.done = true;
        continue;
      }
      auto view = expect_json(claim, 200, "claim for " + w.id);

      std::int64_t duration = 0;
      switch (w.persona) {
        case Persona::diligent:
        case Persona::random:
          duration = between(w.rng, options.honest_ms * 85 / 100, options.honest_ms * 115 / 100);
          break;
        case Persona::bot:
          duration = between(w.rng, 1000, 2000);
          break;
        case Persona::slow:
          duration = options.honest_ms * 10;
          break;
      }

      json answers = json::array();
      json per_slot = json::array();
      const auto& slots = view.at("items");
      for (const auto& slot : slots) {
        std::string label;
        switch (w.persona) {
          case Persona::diligent:
          case Persona::slow:
            label = truth.at(slot.at("text").get<std::string>());
            break;
          case Persona::random:
            label = kIntents[w.rng() % kIntents.size()];
            break;
          case Persona::bot:
            label = kIntents.front();
            break;
        }
        answers.push_back({{"position", slot.at("position")}, {"choice", label}});
        per_slot.push_back(duration / static_cast<std::int64_t>(slots.size()));
      }
      json body = {{"worker_id", w.id},
                   {"unit_id", view.at("unit_id")},
                   {"answers", answers},
                   {"per_slot_ms", per_slot},
                   {"consent_acknowledged", true}};
      if (w.persona == Persona::diligent && w.rng() % 10 == 0) body["feedback"] = "message wording was clear";

      tick(duration);
      auto accepted = expect_json(client.Post(base + "/submit", body.dump(), "application/json"), 201,
                                  "submit for " + w.id);
      outcome.submission_ids.push_back(accepted.at("submission_id").get<std::string>());
      ++outcome.accepted;
      --w.units_left;
      progress = true;
    }
  }
  return outcome;
}

double wilson_upper_95(std::int64_t k, std::int64_t n) {
  const double z = 1.959963984540054;
  const double p = static_cast<double>(k) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double centre = p + z * z / (2 * nn);
  const double margin = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn));
  return (centre + margin) / (1 + z * z / nn);
}

std::vector<std::string> check_persona_report(const json& report, const SimOutcome& outcome) {
  std::vector<std::string> failures;
  std::map<std::string, json> rows;
  for (const auto& w : report.at("workers")) rows[w.at("worker_id").get<std::string>()] = w;

  std::set<std::string> pattern_flagged;
  std::set<std::string> time_flagged;
  for (const auto& [id, row] : rows) {
    if (row.at("pattern_flag").get<bool>()) pattern_flagged.insert(id);
    if (row.at("time_flag").get<bool>()) time_flagged.insert(id);
  }
  if (pattern_flagged != std::set<std::string>{outcome.bot}) {
    std::string got;
    for (const auto& id : pattern_flagged) got += id + " ";
    failures.push_back("pattern flags should be exactly the bot, got: " + got);
  }
  if (time_flagged != std::set<std::string>{outcome.bot, outcome.slow}) {
    std::string got;
    for (const auto& id : time_flagged) got += id + " ";
    failures.push_back("time flags should be exactly bot and slow, got: " + got);
  }

  auto golden = [&](const std::string& id) -> std::optional<std::pair<std::int64_t, std::int64_t>> {
    const auto& g = rows.at(id).at("golden_accuracy");
    if (g.is_null()) return std::nullopt;
    return std::make_pair(g.at("numerator").get<std::int64_t>(), g.at("denominator").get<std::int64_t>());
  };
  for (const auto& id : outcome.diligent) {
    auto g = golden(id);
    if (!g || g->first != g->second) failures.push_back(id + " golden accuracy is not 1.0");
  }
  std::int64_t random_k = 0;
  std::int64_t random_n = 0;
  for (const auto& id : outcome.random) {
    auto g = golden(id);
    if (!g) {
      failures.push_back(id + " has no golden accuracy");
      continue;
    }
    random_k += g->first;
    random_n += g->second;
  }
  if (random_n > 0 && wilson_upper_95(random_k, random_n) > 0.5) {
    failures.push_back("random workers' pooled golden accuracy upper 95% bound exceeds 0.5");
  }

  double min_diligent = 2.0;
  double max_random = -2.0;
  for (const auto& id : outcome.diligent) {
    const auto& k = rows.at(id).at("vs_rest_kappa");
    if (k.is_null()) {
      failures.push_back(id + " has no vs-rest kappa");
      continue;
    }
    min_diligent = std::min(min_diligent, k.get<double>());
  }
  for (const auto& id : outcome.random) {
    const auto& k = rows.at(id).at("vs_rest_kappa");
    if (k.is_null()) {
      failures.push_back(id + " has no vs-rest kappa");
      continue;
    }
    max_random = std::max(max_random, k.get<double>());
  }
  if (!(min_diligent > max_random)) {
    failures.push_back("lowest diligent vs-rest kappa " + std::to_string(min_diligent) +
                       " is not above highest random " + std::to_string(max_random));
  }
  return failures;
}

}  // namespace crowdqc::testing
