#include <doctest.h>

#include "crowdqc/config.hpp"
#include "crowdqc/lint.hpp"
#include "generators.hpp"

using namespace crowdqc;

namespace {

/// A config every rule is satisfied by, at the fair rate.
TaskConfig complete_config() {
  TaskConfig c;
  c.title = "Intents";
  c.general_instructions = std::string(220, 'w');
  for (const char* name : {"greet", "bye"}) {
    Category cat;
    cat.name = name;
    cat.instructions = std::string("Pick ") + name + " when the user means it.";
    cat.examples = {{"hello", "a greeting"}};
    cat.counterexamples = {{"what time is it", "a question, not a greeting"}};
    c.categories.push_back(cat);
  }
  c.payment = {4.0, 1500};
  c.consent = {"You agree to take part.", true};
  return c;
}

std::vector<std::string> codes(const ClarityReport& r) {
  std::vector<std::string> out;
  for (const auto& f : r.findings) out.push_back(f.code);
  return out;
}

}  // namespace

TEST_CASE("complete config at the fair rate only gets the pilot reminder") {
  auto r = lint_clarity(complete_config());
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].code == "pilot-first");
  CHECK(r.findings[0].severity == Severity::info);
  CHECK_FALSE(r.has_errors());
}

TEST_CASE("a category without counterexamples gets exactly one warning") {
  auto c = complete_config();
  c.categories[1].counterexamples.clear();
  auto r = lint_clarity(c);
  CHECK(codes(r) == std::vector<std::string>{"missing-counterexample", "pilot-first"});
  CHECK(r.findings[0].message.find("'bye'") != std::string::npos);
}

TEST_CASE("missing examples and category instructions") {
  auto c = complete_config();
  c.categories[0].examples.clear();
  c.categories[0].instructions = "  ";
  CHECK(codes(lint_clarity(c)) ==
        std::vector<std::string>{"missing-example", "missing-category-instructions", "pilot-first"});
}

TEST_CASE("federal minimum wage triggers the low pay warning") {
  auto c = complete_config();
  c.payment.hourly_rate_cents = 725;
  CHECK(codes(lint_clarity(c)) == std::vector<std::string>{"low-pay", "pilot-first"});
  c.payment.hourly_rate_cents = 1500;
  CHECK(codes(lint_clarity(c)) == std::vector<std::string>{"pilot-first"});
}

TEST_CASE("short instructions are measured in characters, not bytes") {
  auto c = complete_config();
  c.general_instructions = std::string(199, 'a');
  CHECK(codes(lint_clarity(c)).front() == "short-instructions");
  // 100 two-byte characters are 200 bytes but only 100 characters.
  c.general_instructions.clear();
  for (int i = 0; i < 100; ++i) c.general_instructions += "é";
  CHECK(codes(lint_clarity(c)).front() == "short-instructions");
  c.general_instructions = std::string(200, 'a');
  CHECK(codes(lint_clarity(c)) == std::vector<std::string>{"pilot-first"});
}

TEST_CASE("disabled feedback box is flagged") {
  auto c = complete_config();
  c.feedback_enabled = false;
  CHECK(codes(lint_clarity(c)) == std::vector<std::string>{"feedback-disabled", "pilot-first"});
}

TEST_CASE("invalid configs surface their violations as errors") {
  auto c = complete_config();
  c.title = "";
  auto r = lint_clarity(c);
  CHECK(r.has_errors());
  CHECK(r.findings.front().code == "invalid-config");
  CHECK(r.findings.front().severity == Severity::error);
}

TEST_CASE("lint is pure") {
  crowdqc::testing::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto c = crowdqc::testing::random_config(rng);
    CHECK(lint_clarity(c) == lint_clarity(c));
    CHECK(lint_clarity(c).findings.back().code == "pilot-first");
  }
}
