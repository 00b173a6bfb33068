#include "crowdqc/error.hpp"

namespace crowdqc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_document: return "malformed-document";
    case ErrorCode::invariant_violation: return "invariant-violation";
    case ErrorCode::unknown_field: return "unknown-field";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::insufficient_golden: return "insufficient-golden";
    case ErrorCode::empty_items: return "empty-items";
    case ErrorCode::length_mismatch: return "length-mismatch";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::unit_mismatch: return "unit-mismatch";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::wrong_state: return "wrong-state";
    case ErrorCode::malformed_payload: return "malformed-payload";
    case ErrorCode::none_available: return "none-available";
    case ErrorCode::no_claim: return "no-claim";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::consent_missing: return "consent-missing";
    case ErrorCode::agent_unreachable: return "agent-unreachable";
    case ErrorCode::wrong_template: return "wrong-template";
    case ErrorCode::no_submissions: return "no-submissions";
    case ErrorCode::unknown_project: return "unknown-project";
    case ErrorCode::malformed_export: return "malformed-export";
    case ErrorCode::storage: return "storage";
  }
  return "unknown";
}

}  // namespace crowdqc
