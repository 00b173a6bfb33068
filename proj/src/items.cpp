#include "crowdqc/items.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include "crowdqc/csv.hpp"
#include "crowdqc/error.hpp"
#include "json_reader.hpp"

namespace crowdqc {

namespace {

using detail::json;

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

/// A row normalized to named fields. `expected` keeps the JSON value when the
/// source was JSON so structured golden answers need no re-parsing.
struct RawRow {
  std::map<std::string, std::string, std::less<>> fields;
  std::optional<json> expected;
  std::string error;
};

std::vector<std::string> allowed_columns(const TaskConfig& config, bool golden) {
  std::vector<std::string> cols = {"id"};
  if (config.template_kind == TemplateKind::quality_annotation) {
    cols.insert(cols.end(), {"context", "response"});
  } else {
    cols.push_back("text");
  }
  if (golden) cols.push_back("expected_answer");
  return cols;
}

std::vector<RawRow> rows_from_json(std::string_view payload, const std::vector<std::string>& allowed) {
  json doc = detail::parse_json_text(payload, ErrorCode::malformed_payload);
  if (!doc.is_array()) throw Error(ErrorCode::malformed_payload, "expected a JSON array of items");
  std::vector<RawRow> rows;
  for (const auto& entry : doc) {
    RawRow row;
    if (!entry.is_object()) {
      row.error = "row is not an object";
      rows.push_back(std::move(row));
      continue;
    }
    for (const auto& [key, value] : entry.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        row.error = "unknown field '" + key + "'";
        break;
      }
      if (key == "expected_answer") {
        row.expected = value;
      } else if (value.is_string()) {
        row.fields[key] = value.get<std::string>();
      } else if (!value.is_null()) {
        row.error = "field '" + key + "' must be a string";
        break;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawRow> rows_from_csv(std::string_view payload, const std::vector<std::string>& allowed) {
  auto records = csv::parse(payload);
  if (records.empty()) return {};
  const auto& header = records.front();
  for (const auto& col : header) {
    if (std::find(allowed.begin(), allowed.end(), col) == allowed.end()) {
      throw Error(ErrorCode::malformed_payload, "unknown CSV column '" + col + "'");
    }
  }
  std::vector<RawRow> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    RawRow row;
    if (records[r].size() != header.size()) {
      row.error = "expected " + std::to_string(header.size()) + " columns, got " +
                  std::to_string(records[r].size());
    } else {
      for (std::size_t c = 0; c < header.size(); ++c) row.fields[header[c]] = records[r][c];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ItemUpload parse_item_upload(std::string_view payload, UploadFormat format, const TaskConfig& config,
                             bool golden, const std::set<std::string, std::less<>>& taken_ids,
                             std::int64_t first_generated_index) {
  const auto allowed = allowed_columns(config, golden);
  auto rows = format == UploadFormat::json ? rows_from_json(payload, allowed) : rows_from_csv(payload, allowed);

  const bool quality = config.template_kind == TemplateKind::quality_annotation;
  ItemUpload out;
  std::set<std::string, std::less<>> seen;
  std::int64_t next_index = first_generated_index;

  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& row = rows[r];
    auto reject = [&](std::string reason) {
      out.rejected.push_back({static_cast<std::int64_t>(r), std::move(reason)});
    };
    if (!row.error.empty()) {
      reject(row.error);
      continue;
    }
    auto get = [&row](std::string_view key) -> std::string {
      auto it = row.fields.find(key);
      return it == row.fields.end() ? std::string() : it->second;
    };

    AnnotationItem item;
    item.id = get("id");
    if (quality) {
      item.context = get("context");
      item.text = get("response");
      if (blank(item.context)) {
        reject("missing context");
        continue;
      }
      if (blank(item.text)) {
        reject("missing response");
        continue;
      }
    } else {
      item.text = get("text");
      if (blank(item.text)) {
        reject("missing text");
        continue;
      }
    }
    if (item.id.empty()) {
      do {
        item.id = (golden ? "gold-" : "item-") + std::to_string(next_index++);
      } while (taken_ids.contains(item.id) || seen.contains(item.id));
    } else if (taken_ids.contains(item.id) || seen.contains(item.id)) {
      reject("duplicate id '" + item.id + "'");
      continue;
    }

    if (!golden) {
      seen.insert(item.id);
      out.items.push_back(std::move(item));
      continue;
    }
    if (config.template_kind == TemplateKind::interactive) {
      reject("golden data is not supported for the interactive template");
      continue;
    }
    json expected;
    if (row.expected) {
      expected = *row.expected;
    } else {
      auto raw = get("expected_answer");
      if (blank(raw)) {
        reject("missing expected_answer");
        continue;
      }
      if (config.template_kind == TemplateKind::intent_classification) {
        expected = raw;
      } else {
        try {
          expected = json::parse(raw);
        } catch (const json::parse_error&) {
          reject("expected_answer is not valid JSON");
          continue;
        }
      }
    }
    if (expected.is_array() && config.template_kind == TemplateKind::entity_classification) {
      expected = json{{"spans", expected}};
    } else if (expected.is_object() && config.template_kind == TemplateKind::quality_annotation &&
               !expected.contains("ratings")) {
      expected = json{{"ratings", expected}};
    }
    try {
      auto payload_value = payload_from_json(expected, config.template_kind);
      if (auto why = check_payload(payload_value, config, item.text); !why.empty()) {
        reject("expected_answer: " + why);
        continue;
      }
      seen.insert(item.id);
      out.golden.push_back({std::move(item), std::move(payload_value)});
    } catch (const Error& e) {
      reject(std::string("expected_answer: ") + e.what());
    }
  }
  return out;
}

nlohmann::ordered_json item_to_json(const AnnotationItem& item) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["id"] = item.id;
  j["text"] = item.text;
  j["context"] = item.context;
  return j;
}

AnnotationItem item_from_json(const json& value) {
  detail::ObjectReader r(value, "", nullptr, ErrorCode::malformed_export);
  return {r.string("id"), r.string("text"), r.string_or("context", "")};
}

}  // namespace crowdqc
