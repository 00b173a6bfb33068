#include <doctest.h>

#include "crowdqc/answer.hpp"
#include "crowdqc/csv.hpp"
#include "crowdqc/error.hpp"
#include "crowdqc/items.hpp"
#include "generators.hpp"

using namespace crowdqc;

namespace {

TaskConfig config_of(TemplateKind kind) {
  TaskConfig c;
  c.template_kind = kind;
  c.title = "t";
  c.general_instructions = "g";
  if (kind == TemplateKind::quality_annotation) {
    c.categories = {{"fluency", "", {}, {}, {"1", "2", "3"}}};
  } else if (kind == TemplateKind::interactive) {
    c.agent_endpoint = "builtin:echo";
  } else {
    c.categories = {{"city", "", {}, {}, {}}, {"date", "", {}, {}, {}}};
  }
  return c;
}

ItemUpload upload(std::string_view payload, UploadFormat f, const TaskConfig& c, bool golden = false,
                  const std::set<std::string, std::less<>>& taken = {}) {
  return parse_item_upload(payload, f, c, golden, taken, 1);
}

}  // namespace

TEST_CASE("csv reader handles quotes, doubled quotes and line endings") {
  auto rows = csv::parse("a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\n\"multi\nline\",z");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1] == csv::Row{"x, y", "say \"hi\""});
  CHECK(rows[2] == csv::Row{"multi\nline", "z"});
  CHECK_THROWS_AS(csv::parse("\"open"), Error);
}

TEST_CASE("csv writer round trips arbitrary fields") {
  crowdqc::testing::Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    csv::Row row;
    auto n = crowdqc::testing::uniform(rng, 1, 6);
    for (int k = 0; k < n; ++k) row.push_back(crowdqc::testing::random_text(rng, 0, 20) + ",\"\n");
    auto parsed = csv::parse(csv::format_row(row));
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == row);
  }
  CHECK(csv::escape_field("plain") == "plain");
  CHECK(csv::escape_field("a,b") == "\"a,b\"");
}

TEST_CASE("json item upload keeps good rows and rejects bad ones by index") {
  auto c = config_of(TemplateKind::intent_classification);
  auto up = upload(R"([{"id":"a","text":"hello"},{"text":"  "},{"text":"no id"},{"id":"a","text":"again"},
                       {"text":"x","colour":"red"},{"id":"b","text":5}, 7])",
                   UploadFormat::json, c);
  REQUIRE(up.items.size() == 2);
  CHECK(up.items[0] == AnnotationItem{"a", "hello", ""});
  CHECK(up.items[1].id == "item-1");
  REQUIRE(up.rejected.size() == 5);
  CHECK(up.rejected[0].row == 1);
  CHECK(up.rejected[0].reason == "missing text");
  CHECK(up.rejected[1].row == 3);
  CHECK(up.rejected[1].reason.find("duplicate id") != std::string::npos);
  CHECK(up.rejected[2].reason.find("colour") != std::string::npos);
  CHECK(up.rejected[4].row == 6);
}

TEST_CASE("generated ids skip ids already taken") {
  auto c = config_of(TemplateKind::intent_classification);
  auto up = upload(R"([{"text":"x"},{"text":"y"}])", UploadFormat::json, c, false, {"item-1"});
  REQUIRE(up.items.size() == 2);
  CHECK(up.items[0].id == "item-2");
  CHECK(up.items[1].id == "item-3");
  auto dup = upload(R"([{"id":"item-1","text":"x"}])", UploadFormat::json, c, false, {"item-1"});
  CHECK(dup.items.empty());
  CHECK(dup.rejected.size() == 1);
}

TEST_CASE("whole-document problems are malformed payloads") {
  auto c = config_of(TemplateKind::intent_classification);
  auto code = [&](std::string_view text, UploadFormat f) {
    try {
      upload(text, f, c);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::storage;
  };
  CHECK(code("{not json", UploadFormat::json) == ErrorCode::malformed_payload);
  CHECK(code(R"({"text":"x"})", UploadFormat::json) == ErrorCode::malformed_payload);
  CHECK(code("id,colour\n1,red\n", UploadFormat::csv) == ErrorCode::malformed_payload);
}

TEST_CASE("csv item upload") {
  auto c = config_of(TemplateKind::intent_classification);
  auto up = upload("id,text\nu1,hi there\nu2\n,\"quoted, text\"\n", UploadFormat::csv, c);
  REQUIRE(up.items.size() == 2);
  CHECK(up.items[1].text == "quoted, text");
  REQUIRE(up.rejected.size() == 1);
  CHECK(up.rejected[0].row == 1);
  CHECK(upload("", UploadFormat::csv, c).items.empty());
}

TEST_CASE("quality items need context and response") {
  auto c = config_of(TemplateKind::quality_annotation);
  auto up = upload("context,response\nhow are you,fine\n,orphan\n", UploadFormat::csv, c);
  REQUIRE(up.items.size() == 1);
  CHECK(up.items[0].context == "how are you");
  CHECK(up.items[0].text == "fine");
  CHECK(up.rejected.at(0).reason == "missing context");
}

TEST_CASE("intent golden rows") {
  TaskConfig c = config_of(TemplateKind::intent_classification);
  c.categories = {{"greet", "", {}, {}, {}}, {"bye", "", {}, {}, {}}};
  auto up = upload("text,expected_answer\nhello,greet\nciao,farewell\nbye now,\n", UploadFormat::csv, c, true);
  REQUIRE(up.golden.size() == 1);
  CHECK(up.golden[0].item.id == "gold-1");
  CHECK(up.golden[0].expected == AnswerPayload{IntentChoice{"greet"}});
  REQUIRE(up.rejected.size() == 2);
  CHECK(up.rejected[0].reason.find("unknown intent") != std::string::npos);
  CHECK(up.rejected[1].reason == "missing expected_answer");

  auto js = upload(R"([{"text":"hi","expected_answer":{"choice":"greet"}},{"text":"hi","expected_answer":"bye"}])",
                   UploadFormat::json, c, true);
  CHECK(js.golden.size() == 2);
}

TEST_CASE("entity golden answers accept a bare span array and check bounds") {
  auto c = config_of(TemplateKind::entity_classification);
  auto up = upload(R"([{"text":"to paris","expected_answer":[{"start":3,"end":8,"type":"city"}]},
                       {"text":"to paris","expected_answer":[{"start":3,"end":9,"type":"city"}]},
                       {"text":"to paris","expected_answer":"not json"}])",
                   UploadFormat::json, c, true);
  REQUIRE(up.golden.size() == 1);
  CHECK(std::get<SpanSet>(up.golden[0].expected).spans == std::vector<Span>{{3, 8, "city"}});
  REQUIRE(up.rejected.size() == 2);
  CHECK(up.rejected[0].reason.find("outside the item text") != std::string::npos);

  auto csv_up = upload("text,expected_answer\nto paris,\"[{\"\"start\"\":3,\"\"end\"\":8,\"\"type\"\":\"\"city\"\"}]\"\n"
                       "to rome,{bad\n",
                       UploadFormat::csv, c, true);
  CHECK(csv_up.golden.size() == 1);
  CHECK(csv_up.rejected.at(0).reason == "expected_answer is not valid JSON");
}

TEST_CASE("interactive projects take no golden data") {
  auto c = config_of(TemplateKind::interactive);
  auto up = upload(R"([{"text":"book a table","expected_answer":"x"}])", UploadFormat::json, c, true);
  CHECK(up.golden.empty());
  CHECK(up.rejected.size() == 1);
}

TEST_CASE("span offsets count code points") {
  CHECK(codepoint_length("héllo") == 5);
  CHECK(codepoint_length("日本") == 2);
  CHECK(codepoint_length("") == 0);
  auto c = config_of(TemplateKind::entity_classification);
  CHECK(check_payload(SpanSet{{{0, 5, "city"}}}, c, "héllo").empty());
  CHECK_FALSE(check_payload(SpanSet{{{0, 6, "city"}}}, c, "héllo").empty());
  CHECK_FALSE(check_payload(SpanSet{{{2, 2, "city"}}}, c, "héllo").empty());
  CHECK(check_payload(SpanSet{{{0, 2, "city"}, {1, 3, "date"}}}, c, "héllo") == "spans overlap");
  CHECK(check_payload(SpanSet{{{0, 2, "time"}}}, c, "héllo").find("unknown entity type") != std::string::npos);
  CHECK(check_payload(SpanSet{}, c, "").empty());
}

TEST_CASE("whitespace tokens") {
  using P = std::pair<std::int64_t, std::int64_t>;
  CHECK(whitespace_tokens("  fly to  köln ") == std::vector<P>{{2, 5}, {6, 8}, {10, 14}});
  CHECK(whitespace_tokens("   ").empty());
}

TEST_CASE("ratings must cover every question on its scale") {
  auto c = config_of(TemplateKind::quality_annotation);
  CHECK(check_payload(Ratings{{{"fluency", "2"}}}, c, "").empty());
  CHECK_FALSE(check_payload(Ratings{{{"fluency", "9"}}}, c, "").empty());
  CHECK_FALSE(check_payload(Ratings{}, c, "").empty());
  CHECK_FALSE(check_payload(Ratings{{{"fluency", "2"}, {"other", "1"}}}, c, "").empty());
  CHECK_FALSE(check_payload(IntentChoice{"x"}, c, "").empty());
}

TEST_CASE("answers round trip through json") {
  crowdqc::testing::Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    Answer a;
    a.position = crowdqc::testing::uniform(rng, 0, 30);
    TemplateKind kind = static_cast<TemplateKind>(i % 4);
    switch (kind) {
      case TemplateKind::intent_classification:
        a.payload = IntentChoice{crowdqc::testing::random_text(rng, 1, 10)};
        break;
      case TemplateKind::entity_classification: {
        SpanSet s;
        std::int64_t at = 0;
        for (int k = 0; k < crowdqc::testing::uniform(rng, 0, 4); ++k) {
          auto start = at + crowdqc::testing::uniform(rng, 0, 3);
          auto end = start + crowdqc::testing::uniform(rng, 1, 5);
          s.spans.push_back({start, end, crowdqc::testing::random_text(rng, 1, 6)});
          at = end;
        }
        a.payload = s;
        break;
      }
      case TemplateKind::quality_annotation:
        a.payload = Ratings{{{"q" + std::to_string(i), crowdqc::testing::random_text(rng, 1, 4)}}};
        break;
      case TemplateKind::interactive:
        a.payload = Transcript{"s1", {{"worker", crowdqc::testing::random_text(rng, 0, 12)}, {"agent", "ok"}}};
        break;
    }
    auto j = nlohmann::json::parse(answer_to_json(a).dump());
    CHECK(answer_from_json(j, kind) == a);
  }
}

TEST_CASE("item json round trip") {
  AnnotationItem item{"x", "response", "context"};
  CHECK(item_from_json(nlohmann::json::parse(item_to_json(item).dump())) == item);
}
