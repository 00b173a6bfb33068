#include "crowdqc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "crowdqc/config_json.hpp"
#include "crowdqc/error.hpp"
#include "json_reader.hpp"

namespace crowdqc {

namespace {

using detail::json;
using detail::ObjectReader;

constexpr std::string_view kAgentEndpointKey = "agent_endpoint";

std::string_view trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

ordered_json example_to_json(const Example& e) {
  ordered_json j = ordered_json::object();
  j["text"] = e.text;
  j["explanation"] = e.explanation;
  return j;
}

ordered_json examples_to_json(const std::vector<Example>& list) {
  ordered_json out = ordered_json::array();
  for (const auto& e : list) out.push_back(example_to_json(e));
  return out;
}

std::vector<Example> examples_from_json(ObjectReader& parent, std::string_view key,
                                        std::vector<std::string>& unknown) {
  std::vector<Example> out;
  const json* list = parent.array_or_null(key);
  if (list == nullptr) return out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    ObjectReader r((*list)[i], parent.child(key) + "/" + std::to_string(i), &unknown);
    out.push_back({r.string("text"), r.string("explanation")});
  }
  return out;
}

Category category_from_json(const json& value, const std::string& path,
                            std::vector<std::string>& unknown) {
  ObjectReader r(value, path, &unknown);
  Category c;
  c.name = r.string("name");
  c.instructions = r.string_or("instructions", "");
  c.examples = examples_from_json(r, "examples", unknown);
  c.counterexamples = examples_from_json(r, "counterexamples", unknown);
  if (const json* opts = r.array_or_null("answer_options")) {
    for (std::size_t i = 0; i < opts->size(); ++i) {
      c.answer_options.push_back(
          r.as_string((*opts)[i], r.child("answer_options") + "/" + std::to_string(i)));
    }
  }
  return c;
}

}  // namespace

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::intent_classification: return "intent_classification";
    case TemplateKind::entity_classification: return "entity_classification";
    case TemplateKind::quality_annotation: return "quality_annotation";
    case TemplateKind::interactive: return "interactive";
  }
  return "intent_classification";
}

std::optional<TemplateKind> template_from_string(std::string_view text) {
  for (auto kind : {TemplateKind::intent_classification, TemplateKind::entity_classification,
                    TemplateKind::quality_annotation, TemplateKind::interactive}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

const Category* TaskConfig::find_category(std::string_view name) const {
  for (const auto& c : categories) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

bool is_hex_color(std::string_view text) {
  if (text.size() != 4 && text.size() != 7) return false;
  if (text.front() != '#') return false;
  return std::all_of(text.begin() + 1, text.end(),
                     [](unsigned char c) { return std::isxdigit(c) != 0; });
}

ordered_json config_to_json(const TaskConfig& config) {
  ordered_json j = ordered_json::object();
  j["schema"] = kConfigSchemaVersion;
  j["template"] = std::string(to_string(config.template_kind));
  j["title"] = config.title;
  j["general_instructions"] = config.general_instructions;

  ordered_json cats = ordered_json::array();
  for (const auto& c : config.categories) {
    ordered_json cj = ordered_json::object();
    cj["name"] = c.name;
    cj["instructions"] = c.instructions;
    cj["examples"] = examples_to_json(c.examples);
    cj["counterexamples"] = examples_to_json(c.counterexamples);
    cj["answer_options"] = c.answer_options;
    cats.push_back(std::move(cj));
  }
  j["categories"] = std::move(cats);

  ordered_json pay = ordered_json::object();
  pay["estimated_minutes_per_unit"] = config.payment.estimated_minutes_per_unit;
  pay["hourly_rate_cents"] = config.payment.hourly_rate_cents;
  j["payment"] = std::move(pay);

  const auto& qc = config.qc;
  ordered_json q = ordered_json::object();
  q["items_per_unit"] = qc.items_per_unit;
  q["units_per_task"] = qc.units_per_task;
  q["duplicates_per_unit"] = qc.duplicates_per_unit;
  q["golden_per_unit"] = qc.golden_per_unit;
  q["assignments_per_unit"] = qc.assignments_per_unit;
  q["golden_pass_threshold"] = qc.golden_pass_threshold;
  q["shuffle_seed"] = qc.shuffle_seed ? ordered_json(*qc.shuffle_seed) : ordered_json(nullptr);
  q["pilot_unit_count"] = qc.pilot_unit_count;
  ordered_json t = ordered_json::object();
  t["min_overlap"] = qc.thresholds.min_overlap;
  t["pattern_min_answers"] = qc.thresholds.pattern_min_answers;
  t["pattern_modal_fraction"] = qc.thresholds.pattern_modal_fraction;
  q["thresholds"] = std::move(t);
  j["qc"] = std::move(q);

  ordered_json consent = ordered_json::object();
  consent["consent_text"] = config.consent.consent_text;
  consent["required"] = config.consent.required;
  j["consent"] = std::move(consent);

  ordered_json style = ordered_json::object();
  style["background_color"] = config.style.background_color;
  style["font"] = config.style.font;
  j["style"] = std::move(style);

  j["feedback_enabled"] = config.feedback_enabled;
  j[kAgentEndpointKey] =
      config.agent_endpoint ? ordered_json(*config.agent_endpoint) : ordered_json(nullptr);
  return j;
}

TaskConfig config_from_json(const json& document) {
  std::vector<std::string> unknown;
  TaskConfig c;
  {
    ObjectReader root(document, "", &unknown);
    auto version = root.integer("schema");
    if (version != kConfigSchemaVersion) {
      root.fail("/schema", "unsupported schema version " + std::to_string(version));
    }
    auto tmpl = root.string("template");
    auto kind = template_from_string(tmpl);
    if (!kind) root.fail("/template", "unknown template '" + tmpl + "'");
    c.template_kind = *kind;
    c.title = root.string("title");
    c.general_instructions = root.string("general_instructions");

    const json& cats = root.array("categories");
    for (std::size_t i = 0; i < cats.size(); ++i) {
      c.categories.push_back(category_from_json(cats[i], "/categories/" + std::to_string(i), unknown));
    }

    {
      ObjectReader pay(root.require("payment"), "/payment", &unknown);
      c.payment.estimated_minutes_per_unit = pay.number("estimated_minutes_per_unit");
      c.payment.hourly_rate_cents = pay.integer_or("hourly_rate_cents", 1500);
    }
    {
      ObjectReader q(root.require("qc"), "/qc", &unknown);
      auto& qc = c.qc;
      qc.items_per_unit = q.integer("items_per_unit");
      qc.units_per_task = q.integer_or("units_per_task", 1);
      qc.duplicates_per_unit = q.integer_or("duplicates_per_unit", 0);
      qc.golden_per_unit = q.integer_or("golden_per_unit", 0);
      qc.assignments_per_unit = q.integer_or("assignments_per_unit", 3);
      qc.golden_pass_threshold = q.number_or("golden_pass_threshold", 0.8);
      if (const json* seed = q.find("shuffle_seed")) {
        if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0)) {
          q.fail("/qc/shuffle_seed", "expected a non-negative integer");
        }
        qc.shuffle_seed = seed->get<std::uint64_t>();
      }
      qc.pilot_unit_count = q.integer_or("pilot_unit_count", 2);
      if (const json* th = q.find("thresholds")) {
        ObjectReader t(*th, "/qc/thresholds", &unknown);
        qc.thresholds.min_overlap = t.integer_or("min_overlap", 5);
        qc.thresholds.pattern_min_answers = t.integer_or("pattern_min_answers", 10);
        qc.thresholds.pattern_modal_fraction = t.number_or("pattern_modal_fraction", 0.95);
      }
    }
    if (const json* consent = root.find("consent")) {
      ObjectReader r(*consent, "/consent", &unknown);
      c.consent.consent_text = r.string_or("consent_text", "");
      c.consent.required = r.boolean_or("required", true);
    } else {
      c.consent.required = false;
    }
    if (const json* style = root.find("style")) {
      ObjectReader r(*style, "/style", &unknown);
      c.style.background_color = r.string_or("background_color", c.style.background_color);
      c.style.font = r.string_or("font", c.style.font);
    }
    c.feedback_enabled = root.boolean_or("feedback_enabled", true);
    if (const json* ep = root.find(kAgentEndpointKey)) {
      c.agent_endpoint = root.as_string(*ep, "/agent_endpoint");
    }
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    throw Error(ErrorCode::unknown_field, "unknown field(s): " + detail::join(unknown, ", "), unknown);
  }
  auto violations = validate_config(c);
  if (!violations.empty()) {
    std::vector<std::string> details;
    for (const auto& v : violations) details.push_back(v.subject + ": " + v.message);
    throw Error(ErrorCode::invariant_violation, "invariant violated: " + details.front(), details);
  }
  return c;
}

TaskConfig parse_config(std::string_view document) {
  return config_from_json(detail::parse_json_text(document, ErrorCode::malformed_document));
}

std::string serialize_config(const TaskConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

std::vector<Violation> validate_config(const TaskConfig& config) {
  std::vector<Violation> out;
  auto add = [&out](std::string subject, std::string message) {
    out.push_back({std::move(subject), std::move(message)});
  };

  if (trim(config.title).empty()) add("TaskConfig", "title must be non-empty");
  if (trim(config.general_instructions).empty()) {
    add("TaskConfig", "general_instructions must be non-empty");
  }
  const bool interactive = config.template_kind == TemplateKind::interactive;
  const bool has_endpoint = config.agent_endpoint && !trim(*config.agent_endpoint).empty();
  if (interactive && !has_endpoint) {
    add("TaskConfig", "interactive template requires agent_endpoint");
  } else if (!interactive && config.agent_endpoint) {
    add("TaskConfig", "agent_endpoint is only allowed for the interactive template");
  }
  if (!interactive && config.categories.empty()) {
    add("TaskConfig", "categories must be non-empty for " + std::string(to_string(config.template_kind)));
  }

  std::set<std::string, std::less<>> names;
  for (std::size_t i = 0; i < config.categories.size(); ++i) {
    const auto& cat = config.categories[i];
    const std::string where = "categories[" + std::to_string(i) + "]";
    if (trim(cat.name).empty()) add("Category", where + ".name must be non-empty");
    if (!names.insert(cat.name).second) add("Category", where + ".name '" + cat.name + "' is not unique");
    auto check_examples = [&](const std::vector<Example>& list, const char* field) {
      for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string at = where + "." + field + "[" + std::to_string(k) + "]";
        if (trim(list[k].text).empty()) add("Example", at + ".text must be non-empty");
        if (trim(list[k].explanation).empty()) add("Example", at + ".explanation must be non-empty");
      }
    };
    check_examples(cat.examples, "examples");
    check_examples(cat.counterexamples, "counterexamples");

    if (config.template_kind == TemplateKind::entity_classification && !cat.answer_options.empty()) {
      add("Category", where + ".answer_options must be empty for entity_classification");
    }
    if (config.template_kind == TemplateKind::quality_annotation) {
      if (cat.answer_options.empty()) {
        add("Category", where + ".answer_options (rating scale) must be non-empty for quality_annotation");
      }
      std::set<std::string, std::less<>> seen;
      for (const auto& opt : cat.answer_options) {
        if (trim(opt).empty()) add("Category", where + ".answer_options contains an empty label");
        if (!seen.insert(opt).second) add("Category", where + ".answer_options repeats '" + opt + "'");
      }
    }
  }

  const auto& pay = config.payment;
  if (!(std::isfinite(pay.estimated_minutes_per_unit) && pay.estimated_minutes_per_unit > 0)) {
    add("PaymentInputs", "estimated_minutes_per_unit must be > 0");
  }
  if (pay.hourly_rate_cents <= 0) add("PaymentInputs", "hourly_rate_cents must be > 0");

  const auto& qc = config.qc;
  const std::string qcs = "QualityControlConfig";
  if (qc.items_per_unit < 1) add(qcs, "items_per_unit must be >= 1");
  if (qc.units_per_task < 1) add(qcs, "units_per_task must be >= 1");
  if (qc.duplicates_per_unit < 0) add(qcs, "duplicates_per_unit must be >= 0");
  if (qc.golden_per_unit < 0) add(qcs, "golden_per_unit must be >= 0");
  if (qc.assignments_per_unit < 1) add(qcs, "assignments_per_unit must be >= 1");
  if (!(qc.golden_pass_threshold >= 0.0 && qc.golden_pass_threshold <= 1.0)) {
    add(qcs, "golden_pass_threshold must lie in [0, 1]");
  }
  if (qc.pilot_unit_count < 1) add(qcs, "pilot_unit_count must be >= 1");
  if (qc.items_per_unit >= 1 && qc.duplicates_per_unit >= 0 && qc.golden_per_unit >= 0) {
    if (qc.duplicates_per_unit + qc.golden_per_unit >= qc.items_per_unit) {
      add(qcs, "duplicates_per_unit + golden_per_unit must be < items_per_unit (a unit needs a fresh item)");
    } else if (qc.duplicates_per_unit > 0 && qc.items_per_unit < 2 * qc.duplicates_per_unit + 1) {
      add(qcs, "items_per_unit must be >= 2 * duplicates_per_unit + 1 so duplicates can be spaced apart");
    }
  }
  if (interactive && qc.golden_per_unit > 0) {
    add(qcs, "golden_per_unit must be 0 for the interactive template");
  }
  if (qc.thresholds.min_overlap < 1) add(qcs, "thresholds.min_overlap must be >= 1");
  if (qc.thresholds.pattern_min_answers < 1) add(qcs, "thresholds.pattern_min_answers must be >= 1");
  if (!(qc.thresholds.pattern_modal_fraction > 0.0 && qc.thresholds.pattern_modal_fraction <= 1.0)) {
    add(qcs, "thresholds.pattern_modal_fraction must lie in (0, 1]");
  }

  if (config.consent.required && trim(config.consent.consent_text).empty()) {
    add("ConsentConfig", "consent_text must be non-empty when consent is required");
  }
  if (!is_hex_color(config.style.background_color)) {
    add("StyleConfig", "background_color must be a hex color like #fff or #ffffff");
  }
  return out;
}

}  // namespace crowdqc
