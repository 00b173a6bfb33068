#pragma once

#include <span>
#include <string>

namespace crowdqc {

/// Cohen's kappa between two raters over the same items:
/// (p_o - p_e) / (1 - p_e), p_e from the product of the two marginals.
/// When p_e = 1 the result is 1 for identical sequences and 0 otherwise.
/// Computed from integer counts, so symmetry and label-permutation invariance
/// hold exactly. Throws Error(length_mismatch) or Error(empty_input).
double cohen_kappa(std::span<const std::string> labels_a, std::span<const std::string> labels_b);

}  // namespace crowdqc
