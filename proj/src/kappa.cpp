#include "crowdqc/kappa.hpp"

#include <cstdint>
#include <unordered_map>

#include "crowdqc/error.hpp"

namespace crowdqc {

double cohen_kappa(std::span<const std::string> labels_a, std::span<const std::string> labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw Error(ErrorCode::length_mismatch, "kappa needs equal-length label sequences (" +
                                                std::to_string(labels_a.size()) + " vs " +
                                                std::to_string(labels_b.size()) + ")");
  }
  if (labels_a.empty()) throw Error(ErrorCode::empty_input, "kappa needs at least one item");

  std::unordered_map<std::string_view, std::pair<std::int64_t, std::int64_t>> marginals;
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    if (labels_a[i] == labels_b[i]) ++agree;
    ++marginals[labels_a[i]].first;
    ++marginals[labels_b[i]].second;
  }
  const auto n = static_cast<std::int64_t>(labels_a.size());
  // n^2 * p_e as an exact integer.
  std::int64_t chance = 0;
  for (const auto& [_, counts] : marginals) chance += counts.first * counts.second;
  const std::int64_t denom = n * n - chance;
  if (denom == 0) return agree == n ? 1.0 : 0.0;
  return static_cast<double>(n * agree - chance) / static_cast<double>(denom);
}

}  // namespace crowdqc
