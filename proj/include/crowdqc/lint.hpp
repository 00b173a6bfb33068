#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "crowdqc/config.hpp"

namespace crowdqc {

enum class Severity { error, warning, info };

std::string_view to_string(Severity severity);

struct Finding {
  Severity severity = Severity::warning;
  std::string code;
  std::string message;

  bool operator==(const Finding&) const = default;
};

struct ClarityReport {
  std::vector<Finding> findings;

  bool has_errors() const;
  bool operator==(const ClarityReport&) const = default;
};

/// Rule codes. Thresholds live next to the rule so they can be tuned without
/// touching callers.
namespace lint_codes {
inline constexpr std::string_view missing_example = "missing-example";
inline constexpr std::string_view missing_counterexample = "missing-counterexample";
inline constexpr std::string_view missing_category_instructions = "missing-category-instructions";
inline constexpr std::string_view short_instructions = "short-instructions";
inline constexpr std::string_view low_pay = "low-pay";
inline constexpr std::string_view feedback_disabled = "feedback-disabled";
inline constexpr std::string_view pilot_first = "pilot-first";
}  // namespace lint_codes

inline constexpr std::size_t kMinInstructionChars = 200;
inline constexpr std::int64_t kFairHourlyRateCents = 1500;

/// Clarity guidance for requesters. Pure: the same config yields the same
/// findings in the same order.
ClarityReport lint_clarity(const TaskConfig& config);

}  // namespace crowdqc
