#include "crowdqc/service.hpp"

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <set>
#include <tuple>
#include <unordered_map>

#include "crowdqc/config_json.hpp"
#include "crowdqc/dialog.hpp"
#include "crowdqc/error.hpp"
#include "crowdqc/markdown.hpp"
#include "json_reader.hpp"

namespace crowdqc {

namespace {

using detail::json;

std::optional<ProjectState> state_from_string(std::string_view s) {
  for (auto st : {ProjectState::draft, ProjectState::piloting, ProjectState::live, ProjectState::closed}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::string numbered(const char* prefix, std::int64_t n) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s-%06lld", prefix, static_cast<long long>(n));
  return buf;
}

std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

ordered_json markdown_field(const std::string& text) {
  ordered_json j = ordered_json::object();
  j["markdown"] = text;
  j["rendered"] = markdown::to_json(markdown::render(text));
  return j;
}

}  // namespace

std::string_view to_string(ProjectState state) {
  switch (state) {
    case ProjectState::draft: return "draft";
    case ProjectState::piloting: return "piloting";
    case ProjectState::live: return "live";
    case ProjectState::closed: return "closed";
  }
  return "draft";
}

struct Service::Project {
  struct Claim {
    std::string worker_id;
    std::int64_t issued_ms = 0;
    std::int64_t expires_ms = 0;
    bool submitted = false;
  };

  std::string id;
  TaskConfig config;
  ProjectState state = ProjectState::draft;
  std::vector<AnnotationItem> items;
  std::vector<GoldenItem> golden_pool;
  std::vector<TaskUnit> units;
  std::optional<DeploymentPlan> plan;
  std::optional<UnitBuild> build_info;
  std::int64_t next_item_index = 1;

  std::unordered_map<std::string, std::size_t> unit_index;
  std::vector<std::vector<Claim>> claims;  // per unit
  std::vector<Submission> submissions;
  std::map<std::pair<std::string, std::string>, Transcript> transcripts;  // (worker, session)

  mutable std::mutex mu;

  void index_units() {
    unit_index.clear();
    for (std::size_t i = 0; i < units.size(); ++i) unit_index.emplace(units[i].unit_id, i);
    claims.assign(units.size(), {});
  }

  std::set<std::string, std::less<>> taken_ids() const {
    std::set<std::string, std::less<>> ids;
    for (const auto& i : items) ids.insert(i.id);
    for (const auto& g : golden_pool) ids.insert(g.item.id);
    return ids;
  }

  std::size_t claimable_units() const {
    if (state == ProjectState::piloting) {
      return std::min<std::size_t>(units.size(), static_cast<std::size_t>(config.qc.pilot_unit_count));
    }
    return units.size();
  }

  const AnnotationItem* item(const std::string& id) const {
    for (const auto& i : items) {
      if (i.id == id) return &i;
    }
    for (const auto& g : golden_pool) {
      if (g.item.id == id) return &g.item;
    }
    return nullptr;
  }

  Claim* open_claim(std::size_t unit, const std::string& worker, std::int64_t now) {
    for (auto& c : claims[unit]) {
      if (c.worker_id == worker && !c.submitted && c.expires_ms > now) return &c;
    }
    return nullptr;
  }

  ProjectData data() const { return {config, items, golden_pool, units, submissions}; }

  std::string snapshot() const {
    ordered_json j = ordered_json::object();
    j["project_id"] = id;
    j["state"] = std::string(to_string(state));
    j["config"] = config_to_json(config);
    j["next_item_index"] = next_item_index;
    ordered_json it = ordered_json::array();
    for (const auto& i : items) it.push_back(item_to_json(i));
    j["items"] = std::move(it);
    ordered_json gp = ordered_json::array();
    for (const auto& g : golden_pool) gp.push_back(golden_to_json(g));
    j["golden_pool"] = std::move(gp);
    ordered_json us = ordered_json::array();
    for (const auto& u : units) us.push_back(unit_to_json(u));
    j["units"] = std::move(us);
    j["plan"] = plan ? plan_to_json(*plan) : ordered_json(nullptr);
    if (build_info) {
      ordered_json b = ordered_json::object();
      b["seed"] = build_info->seed;
      ordered_json sf = ordered_json::array();
      for (const auto& s : build_info->shortfalls) {
        sf.push_back({{"unit_id", s.unit_id}, {"missing_slots", s.missing_slots},
                      {"dropped_duplicates", s.dropped_duplicates}});
      }
      b["shortfalls"] = std::move(sf);
      j["build"] = std::move(b);
    } else {
      j["build"] = nullptr;
    }
    return j.dump();
  }
};

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.clock) options_.clock = system_clock_ms;
  store_ = std::make_unique<Store>(options_.data_dir);
  recover();
}

Service::~Service() = default;

std::int64_t Service::now() const { return options_.clock(); }

void Service::recover() {
  for (auto& rec : store_->load_all()) {
    auto p = std::make_shared<Project>();
    json snap = json::parse(rec.snapshot);
    p->id = rec.project_id;
    p->config = config_from_json(snap.at("config"));
    p->state = state_from_string(snap.at("state").get<std::string>()).value_or(ProjectState::draft);
    p->next_item_index = snap.value("next_item_index", std::int64_t{1});
    const auto kind = p->config.template_kind;
    for (const auto& i : snap.at("items")) p->items.push_back(item_from_json(i));
    for (const auto& g : snap.at("golden_pool")) p->golden_pool.push_back(golden_from_json(g, kind));
    for (const auto& u : snap.at("units")) p->units.push_back(unit_from_json(u, kind));
    if (!snap.at("plan").is_null()) p->plan = plan_from_json(snap.at("plan"));
    if (!snap.at("build").is_null()) {
      UnitBuild info;
      info.seed = snap["build"].at("seed").get<std::uint64_t>();
      for (const auto& s : snap["build"].at("shortfalls")) {
        info.shortfalls.push_back({s.at("unit_id").get<std::string>(), s.at("missing_slots").get<std::int64_t>(),
                                   s.at("dropped_duplicates").get<std::int64_t>()});
      }
      p->build_info = std::move(info);
    }
    p->index_units();

    for (const auto& ev : rec.events) {
      json body = json::parse(ev.body);
      if (ev.kind == "claim") {
        auto it = p->unit_index.find(body.at("unit_id").get<std::string>());
        if (it == p->unit_index.end()) continue;
        p->claims[it->second].push_back({body.at("worker_id").get<std::string>(), body.at("issued_ms").get<std::int64_t>(),
                                         body.at("expires_ms").get<std::int64_t>(), false});
      } else if (ev.kind == "submit") {
        auto sub = submission_from_json(body, kind);
        auto it = p->unit_index.find(sub.unit_id);
        if (it != p->unit_index.end()) {
          for (auto& c : p->claims[it->second]) {
            if (c.worker_id == sub.worker_id && !c.submitted) c.submitted = true;
          }
        }
        p->submissions.push_back(std::move(sub));
      } else if (ev.kind == "turns") {
        auto& t = p->transcripts[{body.at("worker_id").get<std::string>(), body.at("session_id").get<std::string>()}];
        t.session_id = body.at("session_id").get<std::string>();
        for (const auto& turn : body.at("turns")) {
          t.turns.push_back({turn.at("role").get<std::string>(), turn.at("text").get<std::string>()});
        }
      }
    }
    std::int64_t n = 0;
    if (std::sscanf(p->id.c_str(), "prj-%lld", reinterpret_cast<long long*>(&n)) == 1) {
      next_project_ = std::max(next_project_, n + 1);
    }
    projects_.emplace(p->id, std::move(p));
  }
}

std::shared_ptr<Service::Project> Service::find(const std::string& project_id) const {
  std::shared_lock lock(projects_mu_);
  auto it = projects_.find(project_id);
  if (it == projects_.end()) throw Error(ErrorCode::unknown_project, "no project '" + project_id + "'");
  return it->second;
}

void Service::persist_snapshot(const Project& project) { store_->put_snapshot(project.id, project.snapshot()); }

CreateResult Service::create_project(const TaskConfig& config) {
  auto violations = validate_config(config);
  if (!violations.empty()) {
    std::vector<std::string> details;
    for (const auto& v : violations) details.push_back(v.subject + ": " + v.message);
    throw Error(ErrorCode::invalid_config, "configuration is invalid: " + details.front(), details);
  }
  auto p = std::make_shared<Project>();
  p->config = config;
  {
    std::unique_lock lock(projects_mu_);
    p->id = numbered("prj", next_project_++);
    persist_snapshot(*p);
    projects_.emplace(p->id, p);
  }
  return {p->id, lint_clarity(config)};
}

UploadResult Service::upload_items(const std::string& project_id, std::string_view payload, UploadFormat format,
                                   bool golden) {
  auto p = find(project_id);
  std::lock_guard lock(p->mu);
  if (p->state != ProjectState::draft) {
    throw Error(ErrorCode::wrong_state, "items can only be uploaded while the project is a draft (state is " +
                                            std::string(to_string(p->state)) + ")");
  }
  auto upload = parse_item_upload(payload, format, p->config, golden, p->taken_ids(), p->next_item_index);
  UploadResult result;
  result.accepted = static_cast<std::int64_t>(golden ? upload.golden.size() : upload.items.size());
  result.rejected = std::move(upload.rejected);

  auto items = p->items;
  auto pool = p->golden_pool;
  items.insert(items.end(), upload.items.begin(), upload.items.end());
  pool.insert(pool.end(), upload.golden.begin(), upload.golden.end());
  std::swap(items, p->items);
  std::swap(pool, p->golden_pool);
  const auto previous_index = p->next_item_index;
  p->next_item_index += static_cast<std::int64_t>(upload.items.size() + upload.golden.size() + result.rejected.size());
  try {
    persist_snapshot(*p);
  } catch (...) {
    std::swap(items, p->items);
    std::swap(pool, p->golden_pool);
    p->next_item_index = previous_index;
    throw;
  }
  return result;
}

LaunchResult Service::launch(const std::string& project_id, LaunchMode mode) {
  auto p = find(project_id);
  std::lock_guard lock(p->mu);
  const auto from = p->state;
  ProjectState to;
  if (from == ProjectState::draft) {
    to = mode == LaunchMode::pilot ? ProjectState::piloting : ProjectState::live;
  } else if (from == ProjectState::piloting && mode == LaunchMode::full) {
    to = ProjectState::live;
  } else {
    throw Error(ErrorCode::wrong_state, "cannot launch (" + std::string(mode == LaunchMode::pilot ? "pilot" : "full") +
                                            ") a project that is " + std::string(to_string(from)));
  }

  if (from == ProjectState::draft) {
    if (p->items.empty()) throw Error(ErrorCode::empty_items, "upload items before launching");
    auto plan = plan_deployment(static_cast<std::int64_t>(p->items.size()), p->config.qc, p->config.payment);
    auto build = build_units(p->items, p->golden_pool, p->config.qc);
    p->plan = plan;
    p->units = std::move(build.units);
    build.units.clear();
    p->build_info = std::move(build);
    p->index_units();
  }
  p->state = to;
  try {
    persist_snapshot(*p);
  } catch (...) {
    p->state = from;
    if (from == ProjectState::draft) {
      p->units.clear();
      p->plan.reset();
      p->build_info.reset();
      p->index_units();
    }
    throw;
  }
  LaunchResult r;
  r.state = p->state;
  r.plan = *p->plan;
  r.seed = p->build_info->seed;
  r.shortfalls = p->build_info->shortfalls;
  r.claimable_units = static_cast<std::int64_t>(p->claimable_units());
  return r;
}

void Service::close(const std::string& project_id) {
  auto p = find(project_id);
  std::lock_guard lock(p->mu);
  if (p->state != ProjectState::live && p->state != ProjectState::piloting) {
    throw Error(ErrorCode::wrong_state, "only a launched project can be closed");
  }
  const auto from = p->state;
  p->state = ProjectState::closed;
  try {
    persist_snapshot(*p);
  } catch (...) {
    p->state = from;
    throw;
  }
}

WorkerView Service::claim_next_unit(const std::string& project_id, const std::string& worker_id) {
  if (worker_id.empty()) throw Error(ErrorCode::malformed_payload, "worker_id is required");
  auto p = find(project_id);
  std::lock_guard lock(p->mu);
  if (p->state != ProjectState::live && p->state != ProjectState::piloting) {
    throw Error(ErrorCode::wrong_state, "project is " + std::string(to_string(p->state)) + ", not accepting workers");
  }
  const auto t = now();
  const auto limit = p->claimable_units();

  std::optional<std::size_t> chosen;
  const Project::Claim* existing = nullptr;
  for (std::size_t u = 0; u < p->units.size() && !existing; ++u) {
    existing = p->open_claim(u, worker_id, t);
    if (existing) chosen = u;
  }
  if (!existing) {
    const auto capacity = static_cast<std::size_t>(p->config.qc.assignments_per_unit);
    for (std::size_t u = 0; u < limit && !chosen; ++u) {
      std::set<std::string> holders;
      bool mine = false;
      for (const auto& c : p->claims[u]) {
        if (c.worker_id == worker_id) mine = true;
        if (c.submitted || c.expires_ms > t) holders.insert(c.worker_id);
      }
      if (!mine && holders.size() < capacity) chosen = u;
    }
    if (!chosen) throw Error(ErrorCode::none_available, "no unit available for worker " + worker_id);
    Project::Claim claim{worker_id, t, t + std::chrono::duration_cast<std::chrono::milliseconds>(options_.lease).count(),
                         false};
    json ev = {{"worker_id", worker_id},
               {"unit_id", p->units[*chosen].unit_id},
               {"issued_ms", claim.issued_ms},
               {"expires_ms", claim.expires_ms}};
    store_->append_event(p->id, "claim", ev.dump());
    p->claims[*chosen].push_back(claim);
    existing = &p->claims[*chosen].back();
  }

  const auto& unit = p->units[*chosen];
  WorkerView view;
  view.project_id = p->id;
  view.unit_id = unit.unit_id;
  view.issued_at_ms = existing->issued_ms;
  view.lease_expires_at_ms = existing->expires_ms;
  for (const auto& slot : unit.slots) {
    const AnnotationItem* item = p->item(slot.item_ref);
    view.items.push_back({slot.position, item ? item->text : std::string(), item ? item->context : std::string()});
  }
  return view;
}

SubmitResult Service::submit(const std::string& project_id, const SubmitRequest& request) {
  auto p = find(project_id);
  std::lock_guard lock(p->mu);
  const auto t = now();
  auto uit = p->unit_index.find(request.unit_id);
  if (uit == p->unit_index.end()) {
    throw Error(ErrorCode::no_claim, "worker " + request.worker_id + " holds no claim on " + request.unit_id);
  }
  Project::Claim* claim = p->open_claim(uit->second, request.worker_id, t);
  if (claim == nullptr) {
    throw Error(ErrorCode::no_claim,
                "worker " + request.worker_id + " holds no active claim on " + request.unit_id);
  }
  if (p->config.consent.required && !request.consent_acknowledged) {
    throw Error(ErrorCode::consent_missing, "the consent form must be acknowledged before submitting");
  }
  const TaskUnit& unit = p->units[uit->second];
  const auto kind = p->config.template_kind;
  if (!request.answers.is_array()) throw Error(ErrorCode::shape_mismatch, "answers must be an array");
  if (request.answers.size() != unit.slots.size()) {
    throw Error(ErrorCode::shape_mismatch, "expected " + std::to_string(unit.slots.size()) + " answers, got " +
                                               std::to_string(request.answers.size()));
  }

  Submission sub;
  std::vector<std::string> problems;
  std::vector<bool> seen(unit.slots.size(), false);
  for (std::size_t i = 0; i < request.answers.size(); ++i) {
    const auto& raw = request.answers[i];
    try {
      Answer a;
      if (kind == TemplateKind::interactive) {
        detail::ObjectReader r(raw, "/answers/" + std::to_string(i), nullptr, ErrorCode::shape_mismatch);
        a.position = r.integer("position");
        auto session = r.string("session_id");
        auto tit = p->transcripts.find({request.worker_id, session});
        Transcript tr;
        tr.session_id = session;
        if (tit != p->transcripts.end()) tr = tit->second;
        a.payload = std::move(tr);
      } else {
        a = answer_from_json(raw, kind);
      }
      if (a.position < 0 || a.position >= static_cast<std::int64_t>(unit.slots.size()) || seen[a.position]) {
        problems.push_back("answer " + std::to_string(i) + ": position " + std::to_string(a.position) +
                           " is out of range or repeated");
        continue;
      }
      seen[a.position] = true;
      const AnnotationItem* item = p->item(unit.slots[a.position].item_ref);
      if (auto why = check_payload(a.payload, p->config, item ? item->text : ""); !why.empty()) {
        problems.push_back("slot " + std::to_string(a.position) + ": " + why);
        continue;
      }
      sub.answers.push_back(std::move(a));
    } catch (const Error& e) {
      problems.push_back("answer " + std::to_string(i) + ": " + e.what());
    }
  }
  if (!problems.empty()) throw Error(ErrorCode::shape_mismatch, problems.front(), problems);
  std::sort(sub.answers.begin(), sub.answers.end(),
            [](const Answer& a, const Answer& b) { return a.position < b.position; });

  sub.submission_id = numbered("sub", static_cast<std::int64_t>(p->submissions.size()) + 1);
  sub.worker_id = request.worker_id;
  sub.unit_id = request.unit_id;
  sub.per_slot_ms = request.per_slot_ms;
  sub.total_ms = t - claim->issued_ms;
  if (p->config.feedback_enabled && request.feedback && !request.feedback->empty()) sub.feedback = request.feedback;
  sub.consent_acknowledged = request.consent_acknowledged;
  sub.received_at_ms = t;

  store_->append_event(p->id, "submit", submission_to_json(sub).dump());
  claim->submitted = true;
  SubmitResult result{sub.submission_id, sub.total_ms};
  p->submissions.push_back(std::move(sub));
  return result;
}

RelayResult Service::dialog_relay(const std::string& project_id, const std::string& worker_id,
                                  const std::string& session_id, const std::string& utterance) {
  auto p = find(project_id);
  std::string endpoint;
  {
    std::lock_guard lock(p->mu);
    if (p->config.template_kind != TemplateKind::interactive) {
      throw Error(ErrorCode::wrong_template, "dialog relay is only available for interactive projects");
    }
    if (p->state != ProjectState::live && p->state != ProjectState::piloting) {
      throw Error(ErrorCode::wrong_state, "project is " + std::string(to_string(p->state)));
    }
    endpoint = *p->config.agent_endpoint;
  }
  if (worker_id.empty() || session_id.empty()) {
    throw Error(ErrorCode::malformed_payload, "worker_id and session_id are required");
  }
  // No lock held while waiting on the agent.
  auto reply = ask_agent(endpoint, session_id, utterance, options_.agent_timeout);

  std::lock_guard lock(p->mu);
  json ev = {{"worker_id", worker_id},
             {"session_id", session_id},
             {"turns", json::array({{{"role", "worker"}, {"text", utterance}}, {{"role", "agent"}, {"text", reply}}})}};
  store_->append_event(p->id, "turns", ev.dump());
  auto& t = p->transcripts[{worker_id, session_id}];
  t.session_id = session_id;
  t.turns.push_back({"worker", utterance});
  t.turns.push_back({"agent", reply});
  return {reply, static_cast<std::int64_t>(t.turns.size())};
}

QualityReport Service::get_report(const std::string& project_id) const {
  auto p = find(project_id);
  ProjectData data;
  {
    std::lock_guard lock(p->mu);
    if (p->submissions.empty()) throw Error(ErrorCode::no_submissions, "project has no submissions yet");
    data = p->data();
  }
  return build_report(data);
}

ProjectExport Service::export_project(const std::string& project_id) const {
  auto p = find(project_id);
  std::lock_guard lock(p->mu);
  ProjectExport e;
  e.project_id = p->id;
  e.state = std::string(to_string(p->state));
  e.data = p->data();
  e.plan = p->plan;
  e.build_info = p->build_info;
  return e;
}

ProjectStatus Service::status(const std::string& project_id) const {
  auto p = find(project_id);
  std::lock_guard lock(p->mu);
  ProjectStatus s;
  s.project_id = p->id;
  s.state = p->state;
  s.config = p->config;
  s.items = static_cast<std::int64_t>(p->items.size());
  s.golden_items = static_cast<std::int64_t>(p->golden_pool.size());
  s.units = static_cast<std::int64_t>(p->units.size());
  s.submissions = static_cast<std::int64_t>(p->submissions.size());
  const auto t = now();
  for (const auto& per_unit : p->claims) {
    for (const auto& c : per_unit) {
      if (!c.submitted && c.expires_ms > t) ++s.open_claims;
    }
  }
  s.plan = p->plan;
  return s;
}

std::vector<std::string> Service::project_ids() const {
  std::shared_lock lock(projects_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : projects_) ids.push_back(id);
  return ids;
}

const TaskConfig& Service::config_of(const std::string& project_id) const { return find(project_id)->config; }

ordered_json worker_view_to_json(const WorkerView& view, const TaskConfig& config) {
  ordered_json j = ordered_json::object();
  j["project_id"] = view.project_id;
  j["unit_id"] = view.unit_id;
  j["issued_at_ms"] = view.issued_at_ms;
  j["lease_expires_at_ms"] = view.lease_expires_at_ms;
  j["template"] = std::string(to_string(config.template_kind));
  j["title"] = config.title;
  j["general_instructions"] = markdown_field(config.general_instructions);
  ordered_json cats = ordered_json::array();
  for (const auto& c : config.categories) {
    ordered_json cj = ordered_json::object();
    cj["name"] = c.name;
    cj["instructions"] = markdown_field(c.instructions);
    auto examples = [](const std::vector<Example>& list) {
      ordered_json arr = ordered_json::array();
      for (const auto& e : list) arr.push_back({{"text", e.text}, {"explanation", e.explanation}});
      return arr;
    };
    cj["examples"] = examples(c.examples);
    cj["counterexamples"] = examples(c.counterexamples);
    cj["answer_options"] = c.answer_options;
    cats.push_back(std::move(cj));
  }
  j["categories"] = std::move(cats);
  ordered_json consent = markdown_field(config.consent.consent_text);
  consent["required"] = config.consent.required;
  j["consent"] = std::move(consent);
  j["style"] = {{"background_color", config.style.background_color}, {"font", config.style.font}};
  j["feedback_enabled"] = config.feedback_enabled;
  ordered_json items = ordered_json::array();
  for (const auto& i : view.items) {
    ordered_json ij = ordered_json::object();
    ij["position"] = i.position;
    ij["text"] = i.text;
    if (!i.context.empty()) ij["context"] = i.context;
    items.push_back(std::move(ij));
  }
  j["items"] = std::move(items);
  return j;
}

ordered_json launch_result_to_json(const LaunchResult& r) {
  ordered_json j = ordered_json::object();
  j["state"] = std::string(to_string(r.state));
  j["plan"] = plan_to_json(r.plan);
  j["seed"] = r.seed;
  ordered_json sf = ordered_json::array();
  for (const auto& s : r.shortfalls) {
    sf.push_back({{"unit_id", s.unit_id}, {"missing_slots", s.missing_slots}, {"dropped_duplicates", s.dropped_duplicates}});
  }
  j["shortfalls"] = std::move(sf);
  j["claimable_units"] = r.claimable_units;
  return j;
}

ordered_json lint_to_json(const ClarityReport& report) {
  ordered_json arr = ordered_json::array();
  for (const auto& f : report.findings) {
    arr.push_back({{"severity", std::string(to_string(f.severity))}, {"code", f.code}, {"message", f.message}});
  }
  return arr;
}

ordered_json status_to_json(const ProjectStatus& s) {
  ordered_json j = ordered_json::object();
  j["project_id"] = s.project_id;
  j["state"] = std::string(to_string(s.state));
  j["items"] = s.items;
  j["golden_items"] = s.golden_items;
  j["units"] = s.units;
  j["submissions"] = s.submissions;
  j["open_claims"] = s.open_claims;
  j["plan"] = s.plan ? plan_to_json(*s.plan) : ordered_json(nullptr);
  j["config"] = config_to_json(s.config);
  return j;
}

}  // namespace crowdqc
