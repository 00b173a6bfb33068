#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crowdqc {

/// Machine-readable error codes. The HTTP layer and the CLI both key off these.
enum class ErrorCode {
  malformed_document,
  invariant_violation,
  unknown_field,
  invalid_config,
  insufficient_golden,
  empty_items,
  length_mismatch,
  empty_input,
  unit_mismatch,
  precondition,
  wrong_state,
  malformed_payload,
  none_available,
  no_claim,
  shape_mismatch,
  consent_missing,
  agent_unreachable,
  wrong_template,
  no_submissions,
  unknown_project,
  malformed_export,
  storage,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::vector<std::string> details = {})
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace crowdqc
