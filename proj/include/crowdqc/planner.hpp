#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crowdqc/answer.hpp"
#include "crowdqc/config.hpp"
#include "crowdqc/items.hpp"

namespace crowdqc {

/// Cents per unit at the configured hourly rate, rounded up to a whole cent.
/// The minutes value is taken at its shortest decimal spelling, so 0.12
/// minutes is exactly 12/100 and never rounds an extra cent up.
std::int64_t suggest_payment(const PaymentInputs& inputs);

struct DeploymentPlan {
  std::int64_t fresh_per_unit = 0;
  std::int64_t total_units = 0;
  /// One task corresponds to one posted HIT holding units_per_task units.
  std::int64_t total_tasks = 0;
  std::int64_t suggested_payment_cents_per_unit = 0;
  std::int64_t total_budget_cents = 0;

  bool operator==(const DeploymentPlan&) const = default;
};

DeploymentPlan plan_deployment(std::int64_t n_items, const QualityControlConfig& qc,
                               const PaymentInputs& payment);

enum class SlotKind { fresh, duplicate, golden };

std::string_view to_string(SlotKind kind);

struct Slot {
  std::int64_t position = 0;
  std::string item_ref;
  SlotKind kind = SlotKind::fresh;
  /// Set for duplicates: position of the fresh slot showing the same item.
  std::int64_t of_position = -1;
  /// Set for golden slots.
  std::optional<AnswerPayload> expected;

  bool operator==(const Slot&) const = default;
};

struct TaskUnit {
  std::string unit_id;
  std::vector<Slot> slots;

  bool operator==(const TaskUnit&) const = default;
};

/// A unit that came out shorter than items_per_unit (only the final unit can).
struct UnitShortfall {
  std::string unit_id;
  std::int64_t missing_slots = 0;
  /// Duplicates left out because the short unit could not space them.
  std::int64_t dropped_duplicates = 0;

  bool operator==(const UnitShortfall&) const = default;
};

struct UnitBuild {
  std::vector<TaskUnit> units;
  std::uint64_t seed = 0;
  std::vector<UnitShortfall> shortfalls;

  bool operator==(const UnitBuild&) const = default;
};

/// Splits items into units and injects duplicates and golden slots at
/// seed-driven positions. Throws invalid_config, empty_items or
/// insufficient_golden.
UnitBuild build_units(const std::vector<AnnotationItem>& items, const std::vector<GoldenItem>& golden_pool,
                      const QualityControlConfig& qc);

std::string unit_id_for(std::size_t index);

}  // namespace crowdqc
