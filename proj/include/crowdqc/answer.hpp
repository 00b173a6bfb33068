#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "crowdqc/config.hpp"

namespace crowdqc {

/// Entity span over the item text, in Unicode code points, half-open.
struct Span {
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::string type;

  auto operator<=>(const Span&) const = default;
};

struct IntentChoice {
  std::string label;
  bool operator==(const IntentChoice&) const = default;
};

/// Kept sorted by (start, end, type) so equality means identical span sets.
struct SpanSet {
  std::vector<Span> spans;
  bool operator==(const SpanSet&) const = default;
};

/// One rating per quality question (category name -> scale label).
struct Ratings {
  std::map<std::string, std::string> by_question;
  bool operator==(const Ratings&) const = default;
};

struct Turn {
  std::string role;  // "worker" or "agent"
  std::string text;
  bool operator==(const Turn&) const = default;
};

struct Transcript {
  std::string session_id;
  std::vector<Turn> turns;
  bool operator==(const Transcript&) const = default;
};

using AnswerPayload = std::variant<IntentChoice, SpanSet, Ratings, Transcript>;

struct Answer {
  std::int64_t position = 0;
  AnswerPayload payload;

  bool operator==(const Answer&) const = default;
};

/// Wire form of a payload, without the position key.
nlohmann::ordered_json payload_to_json(const AnswerPayload& payload);
nlohmann::ordered_json answer_to_json(const Answer& answer);

/// Parses a payload for the given template. Intent payloads also accept a bare
/// string (the golden CSV shorthand). Interactive payloads parse a full
/// transcript. Throws Error(malformed_payload).
AnswerPayload payload_from_json(const nlohmann::json& value, TemplateKind kind);
Answer answer_from_json(const nlohmann::json& value, TemplateKind kind);

/// Structural check of a payload against the config and the item text. Returns
/// a reason on failure, empty on success.
std::string check_payload(const AnswerPayload& payload, const TaskConfig& config,
                          std::string_view item_text);

bool payload_matches_template(const AnswerPayload& payload, TemplateKind kind);

/// Code-point length of UTF-8 text (invalid bytes count as one each).
std::int64_t codepoint_length(std::string_view utf8);

/// Whitespace tokens of `utf8` as [start, end) code-point ranges.
std::vector<std::pair<std::int64_t, std::int64_t>> whitespace_tokens(std::string_view utf8);

inline constexpr std::string_view kOutsideLabel = "O";

}  // namespace crowdqc
