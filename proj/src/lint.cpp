#include "crowdqc/lint.hpp"

#include <algorithm>

#include "crowdqc/answer.hpp"
#include "crowdqc/planner.hpp"

namespace crowdqc {

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::info: return "info";
  }
  return "warning";
}

bool ClarityReport::has_errors() const {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.severity == Severity::error; });
}

ClarityReport lint_clarity(const TaskConfig& config) {
  ClarityReport report;
  auto add = [&report](Severity s, std::string_view code, std::string message) {
    report.findings.push_back({s, std::string(code), std::move(message)});
  };

  for (const auto& v : validate_config(config)) {
    add(Severity::error, "invalid-config", v.subject + ": " + v.message);
  }

  for (const auto& cat : config.categories) {
    if (cat.examples.empty()) {
      add(Severity::warning, lint_codes::missing_example,
          "category '" + cat.name + "' has no example; add one with an explanation of why it fits");
    }
    if (cat.counterexamples.empty()) {
      add(Severity::warning, lint_codes::missing_counterexample,
          "category '" + cat.name + "' has no counterexample; add one with an explanation of why it does not fit");
    }
    if (cat.instructions.find_first_not_of(" \t\r\n") == std::string::npos) {
      add(Severity::warning, lint_codes::missing_category_instructions,
          "category '" + cat.name + "' has no instructions of its own");
    }
  }

  const auto length = static_cast<std::size_t>(codepoint_length(config.general_instructions));
  if (length < kMinInstructionChars) {
    add(Severity::warning, lint_codes::short_instructions,
        "general instructions are " + std::to_string(length) + " characters; under " +
            std::to_string(kMinInstructionChars) +
            " usually means incomplete. Say what the data is for and what a good answer looks like");
  }

  const auto& pay = config.payment;
  if (pay.estimated_minutes_per_unit > 0 && pay.hourly_rate_cents > 0) {
    const auto cents = suggest_payment(pay);
    // Effective rate of the suggested payment: cents * 60 / minutes < 1500.
    if (static_cast<long double>(cents) * 60.0L <
        static_cast<long double>(kFairHourlyRateCents) * pay.estimated_minutes_per_unit) {
      add(Severity::warning, lint_codes::low_pay,
          "suggested payment of " + std::to_string(cents) + " cents per unit pays below $15.00/hour");
    }
  }

  if (!config.feedback_enabled) {
    add(Severity::warning, lint_codes::feedback_disabled,
        "the worker feedback box is disabled; workers cannot report unclear instructions");
  }

  add(Severity::info, lint_codes::pilot_first,
      "launch a small pilot first and read the worker feedback before deploying every unit");
  return report;
}

}  // namespace crowdqc
