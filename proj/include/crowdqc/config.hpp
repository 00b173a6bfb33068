#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crowdqc {

enum class TemplateKind {
  intent_classification,
  entity_classification,
  quality_annotation,
  interactive,
};

std::string_view to_string(TemplateKind kind);
std::optional<TemplateKind> template_from_string(std::string_view text);

struct Example {
  std::string text;
  /// Why the requester picked this example (or counterexample).
  std::string explanation;

  bool operator==(const Example&) const = default;
};

struct Category {
  std::string name;
  std::string instructions;
  std::vector<Example> examples;
  std::vector<Example> counterexamples;
  /// Rating-scale labels for quality_annotation questions. Intent answers are the
  /// category names; entity answers are typed spans, so the list stays empty there.
  std::vector<std::string> answer_options;

  bool operator==(const Category&) const = default;
};

struct PaymentInputs {
  double estimated_minutes_per_unit = 1.0;
  std::int64_t hourly_rate_cents = 1500;

  bool operator==(const PaymentInputs&) const = default;
};

/// Analysis knobs. Defaults match the documented detection rules.
struct AnalysisThresholds {
  std::int64_t min_overlap = 5;
  std::int64_t pattern_min_answers = 10;
  double pattern_modal_fraction = 0.95;

  bool operator==(const AnalysisThresholds&) const = default;
};

struct QualityControlConfig {
  std::int64_t items_per_unit = 10;
  std::int64_t units_per_task = 1;
  std::int64_t duplicates_per_unit = 0;
  std::int64_t golden_per_unit = 0;
  std::int64_t assignments_per_unit = 3;
  double golden_pass_threshold = 0.8;
  std::optional<std::uint64_t> shuffle_seed;
  /// Units served while a project is piloting.
  std::int64_t pilot_unit_count = 2;
  AnalysisThresholds thresholds;

  bool operator==(const QualityControlConfig&) const = default;
};

struct ConsentConfig {
  std::string consent_text;
  bool required = true;

  bool operator==(const ConsentConfig&) const = default;
};

struct StyleConfig {
  std::string background_color = "#ffffff";
  std::string font = "sans-serif";

  bool operator==(const StyleConfig&) const = default;
};

struct TaskConfig {
  TemplateKind template_kind = TemplateKind::intent_classification;
  std::string title;
  std::string general_instructions;
  std::vector<Category> categories;
  PaymentInputs payment;
  QualityControlConfig qc;
  ConsentConfig consent;
  StyleConfig style;
  bool feedback_enabled = true;
  std::optional<std::string> agent_endpoint;

  bool operator==(const TaskConfig&) const = default;

  const Category* find_category(std::string_view name) const;
};

/// One broken invariant. `subject` names the type or field that owns it.
struct Violation {
  std::string subject;
  std::string message;

  bool operator==(const Violation&) const = default;
};

inline constexpr int kConfigSchemaVersion = 1;

/// Strict parse of the JSON config document. Throws Error with
/// malformed_document, unknown_field or invariant_violation.
TaskConfig parse_config(std::string_view document);

/// Canonical JSON: fixed key order, two-space indent, trailing newline.
std::string serialize_config(const TaskConfig& config);

std::vector<Violation> validate_config(const TaskConfig& config);

bool is_hex_color(std::string_view text);

}  // namespace crowdqc
