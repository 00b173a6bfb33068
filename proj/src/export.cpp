#include "crowdqc/export.hpp"

#include <algorithm>
#include <unordered_map>

#include "crowdqc/config_json.hpp"
#include "crowdqc/csv.hpp"
#include "crowdqc/error.hpp"
#include "json_reader.hpp"

namespace crowdqc {

namespace {

using detail::json;
using detail::ObjectReader;

std::vector<const Submission*> ordered_submissions(const ProjectData& data) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.units.size(); ++i) index.emplace(data.units[i].unit_id, i);
  std::vector<const Submission*> out;
  for (const auto& s : data.submissions) out.push_back(&s);
  auto unit_rank = [&](const std::string& id) {
    auto it = index.find(id);
    return it == index.end() ? data.units.size() : it->second;
  };
  std::sort(out.begin(), out.end(), [&](const Submission* a, const Submission* b) {
    auto ua = unit_rank(a->unit_id);
    auto ub = unit_rank(b->unit_id);
    if (ua != ub) return ua < ub;
    if (a->worker_id != b->worker_id) return a->worker_id < b->worker_id;
    return a->submission_id < b->submission_id;
  });
  return out;
}

std::optional<SlotKind> slot_kind_from(std::string_view s) {
  for (auto k : {SlotKind::fresh, SlotKind::duplicate, SlotKind::golden}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

}  // namespace

ordered_json plan_to_json(const DeploymentPlan& plan) {
  ordered_json j = ordered_json::object();
  j["fresh_per_unit"] = plan.fresh_per_unit;
  j["total_units"] = plan.total_units;
  j["total_tasks"] = plan.total_tasks;
  j["suggested_payment_cents_per_unit"] = plan.suggested_payment_cents_per_unit;
  j["total_budget_cents"] = plan.total_budget_cents;
  return j;
}

DeploymentPlan plan_from_json(const json& value) {
  ObjectReader r(value, "/plan", nullptr, ErrorCode::malformed_export);
  DeploymentPlan p;
  p.fresh_per_unit = r.integer("fresh_per_unit");
  p.total_units = r.integer("total_units");
  p.total_tasks = r.integer("total_tasks");
  p.suggested_payment_cents_per_unit = r.integer("suggested_payment_cents_per_unit");
  p.total_budget_cents = r.integer("total_budget_cents");
  return p;
}

ordered_json unit_to_json(const TaskUnit& unit) {
  ordered_json j = ordered_json::object();
  j["unit_id"] = unit.unit_id;
  ordered_json slots = ordered_json::array();
  for (const auto& s : unit.slots) {
    ordered_json sj = ordered_json::object();
    sj["position"] = s.position;
    sj["item_ref"] = s.item_ref;
    sj["kind"] = std::string(to_string(s.kind));
    if (s.kind == SlotKind::duplicate) sj["of_position"] = s.of_position;
    if (s.expected) sj["expected_answer"] = payload_to_json(*s.expected);
    slots.push_back(std::move(sj));
  }
  j["slots"] = std::move(slots);
  return j;
}

TaskUnit unit_from_json(const json& value, TemplateKind kind) {
  ObjectReader r(value, "/units", nullptr, ErrorCode::malformed_export);
  TaskUnit u;
  u.unit_id = r.string("unit_id");
  for (const auto& sv : r.array("slots")) {
    ObjectReader sr(sv, "/units/slots", nullptr, ErrorCode::malformed_export);
    Slot s;
    s.position = sr.integer("position");
    s.item_ref = sr.string("item_ref");
    auto k = slot_kind_from(sr.string("kind"));
    if (!k) sr.fail("/units/slots/kind", "unknown slot kind");
    s.kind = *k;
    if (s.kind == SlotKind::duplicate) s.of_position = sr.integer("of_position");
    if (const json* e = sr.find("expected_answer")) s.expected = payload_from_json(*e, kind);
    u.slots.push_back(std::move(s));
  }
  return u;
}

ordered_json golden_to_json(const GoldenItem& golden) {
  ordered_json j = item_to_json(golden.item);
  j["expected_answer"] = payload_to_json(golden.expected);
  return j;
}

GoldenItem golden_from_json(const json& value, TemplateKind kind) {
  ObjectReader r(value, "/golden_pool", nullptr, ErrorCode::malformed_export);
  GoldenItem g;
  g.item = {r.string("id"), r.string("text"), r.string_or("context", "")};
  g.expected = payload_from_json(r.require("expected_answer"), kind);
  return g;
}

ordered_json submission_to_json(const Submission& s) {
  ordered_json j = ordered_json::object();
  j["submission_id"] = s.submission_id;
  j["worker_id"] = s.worker_id;
  j["unit_id"] = s.unit_id;
  ordered_json answers = ordered_json::array();
  for (const auto& a : s.answers) answers.push_back(answer_to_json(a));
  j["answers"] = std::move(answers);
  j["per_slot_ms"] = s.per_slot_ms;
  j["total_ms"] = s.total_ms;
  j["feedback"] = s.feedback ? ordered_json(*s.feedback) : ordered_json(nullptr);
  j["consent_acknowledged"] = s.consent_acknowledged;
  j["received_at_ms"] = s.received_at_ms;
  return j;
}

Submission submission_from_json(const json& value, TemplateKind kind) {
  ObjectReader r(value, "/submissions", nullptr, ErrorCode::malformed_export);
  Submission s;
  s.submission_id = r.string("submission_id");
  s.worker_id = r.string("worker_id");
  s.unit_id = r.string("unit_id");
  for (const auto& a : r.array("answers")) s.answers.push_back(answer_from_json(a, kind));
  if (const json* ms = r.array_or_null("per_slot_ms")) {
    for (const auto& v : *ms) s.per_slot_ms.push_back(r.as_integer(v, "/submissions/per_slot_ms"));
  }
  s.total_ms = r.integer("total_ms");
  if (const json* fb = r.find("feedback")) s.feedback = r.as_string(*fb, "/submissions/feedback");
  s.consent_acknowledged = r.boolean_or("consent_acknowledged", false);
  s.received_at_ms = r.integer_or("received_at_ms", 0);
  return s;
}

std::string export_json(const ProjectExport& p) {
  ordered_json j = ordered_json::object();
  j["schema"] = 1;
  j["project_id"] = p.project_id;
  j["state"] = p.state;
  j["config"] = config_to_json(p.data.config);
  j["plan"] = p.plan ? plan_to_json(*p.plan) : ordered_json(nullptr);
  if (p.build_info) {
    ordered_json b = ordered_json::object();
    b["seed"] = p.build_info->seed;
    ordered_json sf = ordered_json::array();
    for (const auto& s : p.build_info->shortfalls) {
      ordered_json sj = ordered_json::object();
      sj["unit_id"] = s.unit_id;
      sj["missing_slots"] = s.missing_slots;
      sj["dropped_duplicates"] = s.dropped_duplicates;
      sf.push_back(std::move(sj));
    }
    b["shortfalls"] = std::move(sf);
    j["build"] = std::move(b);
  } else {
    j["build"] = nullptr;
  }
  ordered_json items = ordered_json::array();
  for (const auto& i : p.data.items) items.push_back(item_to_json(i));
  j["items"] = std::move(items);
  ordered_json golden = ordered_json::array();
  for (const auto& g : p.data.golden_pool) golden.push_back(golden_to_json(g));
  j["golden_pool"] = std::move(golden);
  ordered_json units = ordered_json::array();
  for (const auto& u : p.data.units) units.push_back(unit_to_json(u));
  j["units"] = std::move(units);
  ordered_json subs = ordered_json::array();
  for (const Submission* s : ordered_submissions(p.data)) subs.push_back(submission_to_json(*s));
  j["submissions"] = std::move(subs);
  return j.dump(2) + "\n";
}

std::string export_csv(const ProjectExport& p) {
  std::string out = csv::format_row({"project_id", "unit_id", "worker_id", "submission_id", "position", "item_id",
                                     "slot_kind", "of_position", "expected_answer", "answer", "total_ms",
                                     "per_slot_ms", "feedback", "consent_acknowledged", "received_at_ms"});
  std::unordered_map<std::string, const TaskUnit*> units;
  for (const auto& u : p.data.units) units.emplace(u.unit_id, &u);
  for (const Submission* s : ordered_submissions(p.data)) {
    const TaskUnit* unit = units.contains(s->unit_id) ? units.at(s->unit_id) : nullptr;
    for (std::size_t i = 0; i < s->answers.size(); ++i) {
      const auto& a = s->answers[i];
      const Slot* slot = nullptr;
      if (unit && a.position >= 0 && a.position < static_cast<std::int64_t>(unit->slots.size())) {
        slot = &unit->slots[a.position];
      }
      std::string slot_ms = i < s->per_slot_ms.size() ? std::to_string(s->per_slot_ms[i]) : "";
      out += csv::format_row({
          p.project_id,
          s->unit_id,
          s->worker_id,
          s->submission_id,
          std::to_string(a.position),
          slot ? slot->item_ref : "",
          slot ? std::string(to_string(slot->kind)) : "",
          slot && slot->kind == SlotKind::duplicate ? std::to_string(slot->of_position) : "",
          slot && slot->expected ? payload_to_json(*slot->expected).dump() : "",
          payload_to_json(a.payload).dump(),
          std::to_string(s->total_ms),
          slot_ms,
          s->feedback.value_or(""),
          s->consent_acknowledged ? "true" : "false",
          std::to_string(s->received_at_ms),
      });
    }
  }
  return out;
}

ProjectExport parse_export(std::string_view text) {
  json doc = detail::parse_json_text(text, ErrorCode::malformed_export);
  try {
    ObjectReader r(doc, "", nullptr, ErrorCode::malformed_export);
    if (r.integer("schema") != 1) r.fail("/schema", "unsupported export schema");
    ProjectExport p;
    p.project_id = r.string("project_id");
    p.state = r.string("state");
    p.data.config = config_from_json(r.require("config"));
    const auto kind = p.data.config.template_kind;
    if (const json* plan = r.find("plan")) p.plan = plan_from_json(*plan);
    if (const json* b = r.find("build")) {
      ObjectReader br(*b, "/build", nullptr, ErrorCode::malformed_export);
      UnitBuild info;
      const json& seed = br.require("seed");
      if (!seed.is_number_unsigned() && !seed.is_number_integer()) br.fail("/build/seed", "expected an integer");
      info.seed = seed.get<std::uint64_t>();
      for (const auto& sv : br.array("shortfalls")) {
        ObjectReader sr(sv, "/build/shortfalls", nullptr, ErrorCode::malformed_export);
        info.shortfalls.push_back({sr.string("unit_id"), sr.integer("missing_slots"), sr.integer("dropped_duplicates")});
      }
      p.build_info = std::move(info);
    }
    for (const auto& i : r.array("items")) p.data.items.push_back(item_from_json(i));
    for (const auto& g : r.array("golden_pool")) p.data.golden_pool.push_back(golden_from_json(g, kind));
    for (const auto& u : r.array("units")) p.data.units.push_back(unit_from_json(u, kind));
    for (const auto& s : r.array("submissions")) p.data.submissions.push_back(submission_from_json(s, kind));
    return p;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::malformed_export) throw;
    throw Error(ErrorCode::malformed_export, std::string("export is invalid: ") + e.what(), e.details());
  }
}

}  // namespace crowdqc
