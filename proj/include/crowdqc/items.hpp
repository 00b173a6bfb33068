#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crowdqc/answer.hpp"
#include "crowdqc/config.hpp"

namespace crowdqc {

/// One unit of requester data. For quality_annotation `context` holds the
/// dialog context and `text` the system response; other templates use `text`
/// only (the utterance, or the scenario prompt for interactive tasks).
struct AnnotationItem {
  std::string id;
  std::string text;
  std::string context;

  bool operator==(const AnnotationItem&) const = default;
};

struct GoldenItem {
  AnnotationItem item;
  AnswerPayload expected;

  bool operator==(const GoldenItem&) const = default;
};

enum class UploadFormat { json, csv };

struct RowRejection {
  std::int64_t row = 0;  // 0-based data row (CSV header excluded)
  std::string reason;
};

struct ItemUpload {
  std::vector<AnnotationItem> items;
  std::vector<GoldenItem> golden;
  std::vector<RowRejection> rejected;
};

/// Per-row validation of an upload. JSON payloads are an array of objects;
/// CSV needs a header row. Columns: `id` (optional), `text` (or `context` and
/// `response` for quality_annotation) and, for golden uploads,
/// `expected_answer`. Ids missing from a row are generated from
/// `first_generated_index`; ids already in `taken_ids` are rejected.
/// Throws Error(malformed_payload) only when the document as a whole is unreadable.
ItemUpload parse_item_upload(std::string_view payload, UploadFormat format, const TaskConfig& config,
                             bool golden, const std::set<std::string, std::less<>>& taken_ids,
                             std::int64_t first_generated_index);

nlohmann::ordered_json item_to_json(const AnnotationItem& item);
AnnotationItem item_from_json(const nlohmann::json& value);

}  // namespace crowdqc
