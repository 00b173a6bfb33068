#include "crowdqc/answer.hpp"

#include <algorithm>

#include "crowdqc/error.hpp"
#include "json_reader.hpp"

namespace crowdqc {

namespace {

using detail::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& message) {
  throw Error(ErrorCode::malformed_payload, message);
}

std::vector<std::uint32_t> decode(std::string_view s) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    if (i + len > s.size()) len = 1;
    std::uint32_t cp = len == 1 ? c : c & (0xFF >> (len + 1));
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

bool is_ws(std::uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' || cp == 0xA0 ||
         cp == 0x3000;
}

}  // namespace

std::int64_t codepoint_length(std::string_view utf8) {
  return static_cast<std::int64_t>(decode(utf8).size());
}

std::vector<std::pair<std::int64_t, std::int64_t>> whitespace_tokens(std::string_view utf8) {
  auto cps = decode(utf8);
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  std::int64_t n = static_cast<std::int64_t>(cps.size());
  for (std::int64_t i = 0; i < n;) {
    while (i < n && is_ws(cps[i])) ++i;
    if (i >= n) break;
    std::int64_t start = i;
    while (i < n && !is_ws(cps[i])) ++i;
    out.emplace_back(start, i);
  }
  return out;
}

ordered_json payload_to_json(const AnswerPayload& payload) {
  ordered_json j = ordered_json::object();
  std::visit(
      [&j](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IntentChoice>) {
          j["choice"] = p.label;
        } else if constexpr (std::is_same_v<T, SpanSet>) {
          auto arr = ordered_json::array();
          for (const auto& s : p.spans) {
            ordered_json sj = ordered_json::object();
            sj["start"] = s.start;
            sj["end"] = s.end;
            sj["type"] = s.type;
            arr.push_back(std::move(sj));
          }
          j["spans"] = std::move(arr);
        } else if constexpr (std::is_same_v<T, Ratings>) {
          ordered_json r = ordered_json::object();
          for (const auto& [q, label] : p.by_question) r[q] = label;
          j["ratings"] = std::move(r);
        } else {
          ordered_json t = ordered_json::object();
          t["session_id"] = p.session_id;
          auto turns = ordered_json::array();
          for (const auto& turn : p.turns) {
            ordered_json tj = ordered_json::object();
            tj["role"] = turn.role;
            tj["text"] = turn.text;
            turns.push_back(std::move(tj));
          }
          t["turns"] = std::move(turns);
          j["transcript"] = std::move(t);
        }
      },
      payload);
  return j;
}

ordered_json answer_to_json(const Answer& answer) {
  ordered_json j = ordered_json::object();
  j["position"] = answer.position;
  auto payload = payload_to_json(answer.payload);
  for (auto& [k, v] : payload.items()) j[k] = v;
  return j;
}

namespace {

AnswerPayload payload_from_reader(detail::ObjectReader& r, TemplateKind kind) {
  switch (kind) {
    case TemplateKind::intent_classification:
      return IntentChoice{r.string("choice")};
    case TemplateKind::entity_classification: {
      SpanSet set;
      const json& spans = r.array("spans");
      for (std::size_t i = 0; i < spans.size(); ++i) {
        detail::ObjectReader s(spans[i], r.child("spans") + "/" + std::to_string(i), nullptr,
                               ErrorCode::malformed_payload);
        set.spans.push_back({s.integer("start"), s.integer("end"), s.string("type")});
      }
      std::sort(set.spans.begin(), set.spans.end());
      return set;
    }
    case TemplateKind::quality_annotation: {
      Ratings ratings;
      const json& obj = r.require("ratings");
      if (!obj.is_object()) r.fail(r.child("ratings"), "expected an object");
      for (const auto& [q, label] : obj.items()) {
        ratings.by_question[q] = r.as_string(label, r.child("ratings") + "/" + q);
      }
      return ratings;
    }
    case TemplateKind::interactive: {
      const json& t = r.require("transcript");
      detail::ObjectReader tr(t, r.child("transcript"), nullptr, ErrorCode::malformed_payload);
      Transcript out;
      out.session_id = tr.string("session_id");
      const json& turns = tr.array("turns");
      for (std::size_t i = 0; i < turns.size(); ++i) {
        detail::ObjectReader turn(turns[i], tr.child("turns") + "/" + std::to_string(i), nullptr,
                                  ErrorCode::malformed_payload);
        out.turns.push_back({turn.string("role"), turn.string("text")});
      }
      return out;
    }
  }
  bad("unsupported template");
}

}  // namespace

AnswerPayload payload_from_json(const json& value, TemplateKind kind) {
  if (kind == TemplateKind::intent_classification && value.is_string()) {
    return IntentChoice{value.get<std::string>()};
  }
  detail::ObjectReader r(value, "", nullptr, ErrorCode::malformed_payload);
  return payload_from_reader(r, kind);
}

Answer answer_from_json(const json& value, TemplateKind kind) {
  detail::ObjectReader r(value, "", nullptr, ErrorCode::malformed_payload);
  Answer a;
  a.position = r.integer("position");
  a.payload = payload_from_reader(r, kind);
  return a;
}

bool payload_matches_template(const AnswerPayload& payload, TemplateKind kind) {
  switch (kind) {
    case TemplateKind::intent_classification: return std::holds_alternative<IntentChoice>(payload);
    case TemplateKind::entity_classification: return std::holds_alternative<SpanSet>(payload);
    case TemplateKind::quality_annotation: return std::holds_alternative<Ratings>(payload);
    case TemplateKind::interactive: return std::holds_alternative<Transcript>(payload);
  }
  return false;
}

std::string check_payload(const AnswerPayload& payload, const TaskConfig& config,
                          std::string_view item_text) {
  if (!payload_matches_template(payload, config.template_kind)) {
    return "answer kind does not match template " + std::string(to_string(config.template_kind));
  }
  if (const auto* choice = std::get_if<IntentChoice>(&payload)) {
    if (config.find_category(choice->label) == nullptr) return "unknown intent '" + choice->label + "'";
    return {};
  }
  if (const auto* set = std::get_if<SpanSet>(&payload)) {
    const auto len = codepoint_length(item_text);
    std::int64_t prev_end = 0;
    for (std::size_t i = 0; i < set->spans.size(); ++i) {
      const auto& s = set->spans[i];
      if (s.start < 0 || s.end > len || s.start >= s.end) {
        return "span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
               ") is outside the item text (length " + std::to_string(len) + ")";
      }
      if (i > 0 && s.start < prev_end) return "spans overlap";
      prev_end = s.end;
      if (config.find_category(s.type) == nullptr) return "unknown entity type '" + s.type + "'";
    }
    return {};
  }
  if (const auto* ratings = std::get_if<Ratings>(&payload)) {
    for (const auto& cat : config.categories) {
      auto it = ratings->by_question.find(cat.name);
      if (it == ratings->by_question.end()) return "missing rating for question '" + cat.name + "'";
      if (std::find(cat.answer_options.begin(), cat.answer_options.end(), it->second) ==
          cat.answer_options.end()) {
        return "rating '" + it->second + "' is not on the scale of '" + cat.name + "'";
      }
    }
    if (ratings->by_question.size() != config.categories.size()) return "rating for an unknown question";
    return {};
  }
  const auto& t = std::get<Transcript>(payload);
  for (const auto& turn : t.turns) {
    if (turn.role != "worker" && turn.role != "agent") return "transcript turn has unknown role '" + turn.role + "'";
  }
  return {};
}

}  // namespace crowdqc
