#pragma once

// Strict field-by-field reader over nlohmann::json objects. Tracks which keys
// were consumed so unknown keys can be reported with their JSON-pointer path.

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crowdqc/error.hpp"

namespace crowdqc::detail {

using json = nlohmann::json;

class ObjectReader {
 public:
  ObjectReader(const json& value, std::string path, std::vector<std::string>* unknown,
               ErrorCode type_error = ErrorCode::malformed_document)
      : value_(value), path_(std::move(path)), unknown_(unknown), type_error_(type_error) {
    if (!value_.is_object()) fail(path_or_root(), "expected an object");
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  ~ObjectReader() {
    if (unknown_ == nullptr) return;
    for (const auto& [key, _] : value_.items()) {
      if (!seen_.contains(key)) unknown_->push_back(path_ + "/" + key);
    }
  }

  const std::string& path() const { return path_; }
  std::string child(std::string_view key) const { return path_ + "/" + std::string(key); }

  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = value_.find(key);
    if (it == value_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json& require(std::string_view key) {
    const json* v = find(key);
    if (v == nullptr) fail(child(key), "missing required field");
    return *v;
  }

  std::string string(std::string_view key) { return as_string(require(key), child(key)); }
  std::string string_or(std::string_view key, std::string fallback) {
    const json* v = find(key);
    return v ? as_string(*v, child(key)) : fallback;
  }

  std::int64_t integer(std::string_view key) { return as_integer(require(key), child(key)); }
  std::int64_t integer_or(std::string_view key, std::int64_t fallback) {
    const json* v = find(key);
    return v ? as_integer(*v, child(key)) : fallback;
  }

  double number(std::string_view key) { return as_number(require(key), child(key)); }
  double number_or(std::string_view key, double fallback) {
    const json* v = find(key);
    return v ? as_number(*v, child(key)) : fallback;
  }

  bool boolean_or(std::string_view key, bool fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) fail(child(key), "expected a boolean");
    return v->get<bool>();
  }

  const json& array(std::string_view key) {
    const json& v = require(key);
    if (!v.is_array()) fail(child(key), "expected an array");
    return v;
  }
  const json* array_or_null(std::string_view key) {
    const json* v = find(key);
    if (v != nullptr && !v->is_array()) fail(child(key), "expected an array");
    return v;
  }

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw Error(type_error_, where + ": " + what, {where});
  }

  std::string as_string(const json& v, const std::string& where) const {
    if (!v.is_string()) fail(where, "expected a string");
    return v.get<std::string>();
  }
  std::int64_t as_integer(const json& v, const std::string& where) const {
    if (v.is_number_unsigned()) {
      auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(INT64_MAX)) fail(where, "integer out of range");
      return static_cast<std::int64_t>(u);
    }
    if (!v.is_number_integer()) fail(where, "expected an integer");
    return v.get<std::int64_t>();
  }
  double as_number(const json& v, const std::string& where) const {
    if (!v.is_number()) fail(where, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(where, "expected a finite number");
    return d;
  }

 private:
  std::string path_or_root() const { return path_.empty() ? "/" : path_; }

  const json& value_;
  std::string path_;
  std::vector<std::string>* unknown_;
  ErrorCode type_error_;
  std::set<std::string, std::less<>> seen_;
};

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

/// Parses text into JSON, mapping syntax errors onto `code` with the byte
/// position nlohmann reports.
inline json parse_json_text(std::string_view text, ErrorCode code) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(code, std::string("malformed JSON: ") + e.what(),
                {"byte " + std::to_string(e.byte)});
  }
}

}  // namespace crowdqc::detail
