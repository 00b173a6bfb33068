#include "crowdqc/planner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "crowdqc/error.hpp"

namespace crowdqc {

namespace {

/// Splits a positive finite double into digits × 10^exponent using the
/// shortest round-trip decimal spelling.
bool decimal_parts(double value, __int128& digits, int& exponent) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc()) return false;
  std::string_view text(buf, res.ptr - buf);
  digits = 0;
  exponent = 0;
  int digit_count = 0;
  bool after_dot = false;
  std::size_t i = 0;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      after_dot = true;
    } else if (c >= '0' && c <= '9') {
      if (++digit_count > 30) return false;
      digits = digits * 10 + (c - '0');
      if (after_dot) --exponent;
    } else {
      break;
    }
  }
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    int e = 0;
    auto [p, ec] = std::from_chars(text.data() + i + 1 + (text[i + 1] == '+' ? 1 : 0), text.data() + text.size(), e);
    if (ec != std::errc()) return false;
    exponent += e;
  }
  return exponent > -30 && exponent < 20;
}

__int128 pow10(int n) {
  __int128 r = 1;
  while (n-- > 0) r *= 10;
  return r;
}

/// Uniform integer in [0, n) by rejection; keeps results identical across
/// standard libraries, unlike std::uniform_int_distribution.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

struct Group {
  std::string item_ref;
  bool golden = false;
  std::optional<AnswerPayload> expected;
  std::int64_t count = 1;
};

/// Whether `counts` can fill `remaining` slots with no two equal neighbours
/// when the first slot may not be group `last`.
bool arrangeable(const std::vector<std::int64_t>& counts, std::int64_t remaining, std::ptrdiff_t last) {
  for (std::size_t g = 0; g < counts.size(); ++g) {
    const std::int64_t bound = static_cast<std::ptrdiff_t>(g) == last ? remaining / 2 : (remaining + 1) / 2;
    if (counts[g] > bound) return false;
  }
  return true;
}

/// Seeded arrangement of group copies with no two copies of a group adjacent.
std::vector<std::size_t> arrange(std::vector<std::int64_t> counts, std::mt19937_64& rng) {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  std::vector<std::size_t> order;
  order.reserve(static_cast<std::size_t>(total));
  std::ptrdiff_t last = -1;
  std::vector<std::size_t> candidates;
  for (std::int64_t remaining = total; remaining > 0; --remaining) {
    candidates.clear();
    std::uint64_t weight = 0;
    for (std::size_t g = 0; g < counts.size(); ++g) {
      if (counts[g] == 0 || static_cast<std::ptrdiff_t>(g) == last) continue;
      --counts[g];
      bool ok = arrangeable(counts, remaining - 1, static_cast<std::ptrdiff_t>(g));
      ++counts[g];
      if (ok) {
        candidates.push_back(g);
        weight += static_cast<std::uint64_t>(counts[g]);
      }
    }
    // The caller guarantees feasibility, so candidates is never empty.
    auto pick = uniform_below(rng, weight);
    std::size_t chosen = candidates.back();
    for (auto g : candidates) {
      auto w = static_cast<std::uint64_t>(counts[g]);
      if (pick < w) {
        chosen = g;
        break;
      }
      pick -= w;
    }
    order.push_back(chosen);
    --counts[chosen];
    last = static_cast<std::ptrdiff_t>(chosen);
  }
  return order;
}

}  // namespace

std::int64_t suggest_payment(const PaymentInputs& inputs) {
  if (!(inputs.estimated_minutes_per_unit > 0) || !std::isfinite(inputs.estimated_minutes_per_unit) ||
      inputs.hourly_rate_cents <= 0) {
    throw Error(ErrorCode::precondition, "payment inputs must be positive");
  }
  __int128 digits = 0;
  int exponent = 0;
  if (decimal_parts(inputs.estimated_minutes_per_unit, digits, exponent)) {
    __int128 num = static_cast<__int128>(inputs.hourly_rate_cents) * digits;
    __int128 den = 60;
    if (exponent >= 0) {
      num *= pow10(exponent);
    } else {
      den *= pow10(-exponent);
    }
    return static_cast<std::int64_t>((num + den - 1) / den);
  }
  long double cents = static_cast<long double>(inputs.hourly_rate_cents) *
                      static_cast<long double>(inputs.estimated_minutes_per_unit) / 60.0L;
  return static_cast<std::int64_t>(std::ceil(cents));
}

DeploymentPlan plan_deployment(std::int64_t n_items, const QualityControlConfig& qc,
                               const PaymentInputs& payment) {
  if (n_items < 1) throw Error(ErrorCode::precondition, "plan_deployment needs at least one item");
  DeploymentPlan plan;
  plan.fresh_per_unit = qc.items_per_unit - qc.duplicates_per_unit - qc.golden_per_unit;
  if (plan.fresh_per_unit <= 0) {
    throw Error(ErrorCode::invalid_config,
                "items_per_unit leaves no fresh item after duplicates and golden slots");
  }
  if (qc.units_per_task < 1 || qc.assignments_per_unit < 1) {
    throw Error(ErrorCode::invalid_config, "units_per_task and assignments_per_unit must be positive");
  }
  plan.total_units = (n_items + plan.fresh_per_unit - 1) / plan.fresh_per_unit;
  plan.total_tasks = (plan.total_units + qc.units_per_task - 1) / qc.units_per_task;
  plan.suggested_payment_cents_per_unit = suggest_payment(payment);
  plan.total_budget_cents = plan.total_units * qc.assignments_per_unit * plan.suggested_payment_cents_per_unit;
  return plan;
}

std::string_view to_string(SlotKind kind) {
  switch (kind) {
    case SlotKind::fresh: return "fresh";
    case SlotKind::duplicate: return "duplicate";
    case SlotKind::golden: return "golden";
  }
  return "fresh";
}

std::string unit_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "unit-%05zu", index + 1);
  return buf;
}

UnitBuild build_units(const std::vector<AnnotationItem>& items, const std::vector<GoldenItem>& golden_pool,
                      const QualityControlConfig& qc) {
  const std::int64_t fresh_per_unit = qc.items_per_unit - qc.duplicates_per_unit - qc.golden_per_unit;
  if (qc.duplicates_per_unit < 0 || qc.golden_per_unit < 0 || fresh_per_unit <= 0) {
    throw Error(ErrorCode::invalid_config, "a unit needs at least one fresh item");
  }
  if (qc.duplicates_per_unit > 0 && qc.items_per_unit < 2 * qc.duplicates_per_unit + 1) {
    throw Error(ErrorCode::invalid_config, "items_per_unit too small to space duplicates apart");
  }
  if (items.empty()) throw Error(ErrorCode::empty_items, "no items to build units from");
  if (qc.golden_per_unit > 0 && static_cast<std::int64_t>(golden_pool.size()) < qc.golden_per_unit) {
    throw Error(ErrorCode::insufficient_golden,
                "golden pool has " + std::to_string(golden_pool.size()) + " items, each unit needs " +
                    std::to_string(qc.golden_per_unit));
  }

  UnitBuild out;
  if (qc.shuffle_seed) {
    out.seed = *qc.shuffle_seed;
  } else {
    std::random_device rd;
    out.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  std::mt19937_64 rng(out.seed);

  const std::size_t pool_size = golden_pool.size();
  std::size_t golden_cursor = 0;
  const auto n = static_cast<std::int64_t>(items.size());
  const std::int64_t unit_count = (n + fresh_per_unit - 1) / fresh_per_unit;

  for (std::int64_t u = 0; u < unit_count; ++u) {
    const std::int64_t begin = u * fresh_per_unit;
    const std::int64_t end = std::min(n, begin + fresh_per_unit);
    const std::int64_t fresh = end - begin;

    std::vector<Group> groups;
    for (std::int64_t i = begin; i < end; ++i) groups.push_back({items[i].id, false, std::nullopt, 1});

    std::set<std::size_t> used_golden;
    auto take_golden = [&](const GoldenItem& g) {
      groups.push_back({g.item.id, true, g.expected, 1});
    };
    for (std::int64_t k = 0; k < qc.golden_per_unit; ++k) {
      std::size_t idx = golden_cursor++ % pool_size;
      used_golden.insert(idx);
      take_golden(golden_pool[idx]);
    }
    std::int64_t missing = fresh_per_unit - fresh;
    for (std::size_t tries = 0; missing > 0 && pool_size > 0 && tries < pool_size; ++tries) {
      std::size_t idx = golden_cursor % pool_size;
      if (used_golden.contains(idx)) {
        // Every remaining pool item is already in this unit.
        if (used_golden.size() == pool_size) break;
        ++golden_cursor;
        continue;
      }
      ++golden_cursor;
      used_golden.insert(idx);
      take_golden(golden_pool[idx]);
      --missing;
    }

    // Duplicates go round-robin over a seeded permutation of the fresh items.
    std::vector<std::size_t> perm(static_cast<std::size_t>(fresh));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_below(rng, i)]);
    for (std::int64_t k = 0; k < qc.duplicates_per_unit; ++k) ++groups[perm[k % fresh]].count;

    std::int64_t dropped = 0;
    std::vector<std::int64_t> counts;
    for (const auto& g : groups) counts.push_back(g.count);
    auto total = [&counts] {
      std::int64_t t = 0;
      for (auto c : counts) t += c;
      return t;
    };
    while (!arrangeable(counts, total(), -1)) {
      auto it = std::max_element(counts.begin(), counts.end());
      --*it;
      ++dropped;
    }

    TaskUnit unit;
    unit.unit_id = unit_id_for(static_cast<std::size_t>(u));
    std::vector<std::int64_t> first_position(groups.size(), -1);
    auto order = arrange(counts, rng);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const auto g = order[pos];
      Slot slot;
      slot.position = static_cast<std::int64_t>(pos);
      slot.item_ref = groups[g].item_ref;
      if (groups[g].golden) {
        slot.kind = SlotKind::golden;
        slot.expected = groups[g].expected;
      } else if (first_position[g] < 0) {
        slot.kind = SlotKind::fresh;
        first_position[g] = slot.position;
      } else {
        slot.kind = SlotKind::duplicate;
        slot.of_position = first_position[g];
      }
      unit.slots.push_back(std::move(slot));
    }

    const auto short_by = qc.items_per_unit - static_cast<std::int64_t>(unit.slots.size());
    if (short_by > 0 || dropped > 0) out.shortfalls.push_back({unit.unit_id, short_by, dropped});
    out.units.push_back(std::move(unit));
  }
  return out;
}

}  // namespace crowdqc
