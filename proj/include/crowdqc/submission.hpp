#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crowdqc/answer.hpp"
#include "crowdqc/config.hpp"
#include "crowdqc/items.hpp"
#include "crowdqc/planner.hpp"

namespace crowdqc {

struct Submission {
  std::string submission_id;
  std::string worker_id;
  std::string unit_id;
  /// One answer per slot, ordered by position.
  std::vector<Answer> answers;
  /// Client-reported per-slot timings; advisory only.
  std::vector<std::int64_t> per_slot_ms;
  /// Server-measured submit time minus claim issue time.
  std::int64_t total_ms = 0;
  std::optional<std::string> feedback;
  bool consent_acknowledged = false;
  std::int64_t received_at_ms = 0;

  bool operator==(const Submission&) const = default;
};

/// Everything analytics needs about one project. Both the live service and an
/// offline export produce this.
struct ProjectData {
  TaskConfig config;
  std::vector<AnnotationItem> items;
  std::vector<GoldenItem> golden_pool;
  std::vector<TaskUnit> units;
  std::vector<Submission> submissions;
};

}  // namespace crowdqc
