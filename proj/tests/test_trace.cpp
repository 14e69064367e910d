#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "testutil.hpp"

using namespace driveagent;
using testutil::fixture_path;

namespace {

Trace two_step_trace() {
  Trace t;
  t.scene_id = "s0";
  t.question_id = "s0-q1";
  ReasoningStep s1;
  s1.index = 1;
  s1.tool_call = tools::ToolCall{"get_leading_object_detection", Json::array()};
  s1.sub_question = "What is the leading object?";
  s1.uncertainty_flag = true;
  s1.action_choice = ActionChoice::continue_reasoning;
  s1.observation = tools::ToolResult::ok(Json{{"id", "O1"}, {"category", "car"}});
  ReasoningStep s2;
  s2.index = 2;
  s2.sub_question = "What is the leading object?";
  s2.uncertainty_flag = false;
  s2.guessed_answer = "A. car";
  s2.action_choice = ActionChoice::conclude;
  t.steps = {s1, s2};
  t.final_answer = "A. car";
  return t;
}

}  // namespace

TEST_CASE("parse inverts serialize on the canonical two-step trace") {
  Trace t = two_step_trace();
  std::string text = serialize_trace(t);
  ParseResult parsed = parse_trace(text);
  REQUIRE(parsed.ok());
  CHECK(serialize_trace(*parsed.trace) == text);
  CHECK(parsed.trace->steps.size() == 2);
  CHECK(parsed.trace->steps[0].observation->value["id"] == "O1");
}

TEST_CASE("golden trace file stays byte-stable") {
  std::string golden = read_file(fixture_path("traces/tr0.jsonl"));
  // strip trailing newline for the line comparison
  std::string line = golden.substr(0, golden.find('\n'));
  ParseResult parsed = parse_trace(line);
  REQUIRE(parsed.ok());
  CHECK(serialize_trace(*parsed.trace) == line);
}

TEST_CASE("parse reports the complete error list") {
  Json doc = Json::parse(serialize_trace(two_step_trace()));
  doc["steps"][1].erase("action_choice");
  doc["steps"][0].erase("sub_question");
  ParseResult parsed = trace_from_json(doc);
  CHECK(!parsed.ok());
  REQUIRE(parsed.errors.size() == 2);
  CHECK(parsed.errors[0].step_index == 1);
  CHECK(parsed.errors[0].field == "sub_question");
  CHECK(parsed.errors[1].step_index == 2);
  CHECK(parsed.errors[1].field == "action_choice");
  CHECK(parsed.errors[1].message == "missing");
}

TEST_CASE("zero-step trace with a final answer is valid") {
  Trace t;
  t.scene_id = "s";
  t.question_id = "q";
  t.final_answer = "none";
  std::string text = serialize_trace(t);
  ParseResult parsed = parse_trace(text);
  REQUIRE(parsed.ok());
  CHECK(parsed.trace->steps.empty());
  CHECK(parsed.trace->final_answer == "none");
}

TEST_CASE("serialize rejects invariant violations by name") {
  Trace t = two_step_trace();

  SUBCASE("step after conclude") {
    ReasoningStep extra = t.steps[1];
    extra.index = 3;
    t.steps[1].action_choice = ActionChoice::conclude;
    t.steps.push_back(extra);
    CHECK_THROWS_WITH_AS(serialize_trace(t), doctest::Contains("step after conclude"), Error);
  }
  SUBCASE("uncertainty/answer coupling") {
    t.steps[0].guessed_answer = "oops";  // uncertain step must stay blank
    CHECK_THROWS_WITH_AS(serialize_trace(t), doctest::Contains("blank"), Error);
  }
  SUBCASE("observation without tool call") {
    t.steps[1].observation = tools::ToolResult::not_found();
    CHECK_THROWS_WITH_AS(serialize_trace(t), doctest::Contains("observation"), Error);
  }
  SUBCASE("non-contiguous indices") {
    t.steps[1].index = 5;
    CHECK_THROWS_AS(serialize_trace(t), Error);
  }
}

TEST_CASE("step cap is enforced at parse time") {
  Trace t;
  t.scene_id = "s";
  t.question_id = "q";
  for (int i = 1; i <= 9; ++i) {
    ReasoningStep s;
    s.index = i;
    s.sub_question = "q";
    s.uncertainty_flag = false;
    s.guessed_answer = "a";
    s.action_choice = ActionChoice::continue_reasoning;
    t.steps.push_back(s);
  }
  t.final_answer = "a";
  std::string text = serialize_trace(t);  // serialization itself has no cap
  CHECK(!parse_trace(text, 8).ok());
  CHECK(parse_trace(text, 9).ok());
}

TEST_CASE("random valid traces round-trip and re-serialize identically") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    Trace t = testutil::random_valid_trace(rng);
    std::string text = serialize_trace(t);
    ParseResult parsed = parse_trace(text);
    REQUIRE(parsed.ok());
    CHECK(serialize_trace(*parsed.trace) == text);
  }
}

TEST_CASE("validate_format scores violations over checks") {
  const auto& registry = tools::default_registry();
  Trace t = two_step_trace();

  // two steps: 2 trace-level + 4 per step = 10 checks
  ComplianceReport clean = validate_format(t, registry);
  CHECK(clean.checks == 10);
  CHECK(clean.violations == 0);
  CHECK(clean.compliance_score == 1.0);

  SUBCASE("one unknown tool among 10 checks scores 0.9") {
    t.steps[0].tool_call->name = "not_a_tool";
    ComplianceReport report = validate_format(t, registry);
    CHECK(report.checks == 10);
    CHECK(report.violations == 1);
    CHECK(report.compliance_score == doctest::Approx(0.9));
    REQUIRE(report.field_errors.size() == 1);
    CHECK(report.field_errors[0].field == "tool_call");
  }
  SUBCASE("uncertainty coupling violation is listed") {
    t.steps[0].guessed_answer = "oops";
    ComplianceReport report = validate_format(t, registry);
    CHECK(report.compliance_score < 1.0);
    bool found = std::any_of(report.field_errors.begin(), report.field_errors.end(),
                             [](const TraceError& e) { return e.field == "guessed_answer"; });
    CHECK(found);
  }
  SUBCASE("score decreases monotonically as violations accumulate") {
    double prev = validate_format(t, registry).compliance_score;
    t.steps[0].tool_call->name = "not_a_tool";
    double one = validate_format(t, registry).compliance_score;
    CHECK(one < prev);
    t.steps[0].guessed_answer = "oops";
    double two = validate_format(t, registry).compliance_score;
    CHECK(two < one);
    t.steps[1].index = 7;
    double three = validate_format(t, registry).compliance_score;
    CHECK(three < two);
  }
}

TEST_CASE("single-field injected violations are always detected") {
  const auto& registry = tools::default_registry();
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    Trace base = testutil::random_valid_trace(rng);
    if (base.steps.empty()) continue;
    std::size_t pick = rng.below(base.steps.size());

    for (int mode = 0; mode < 5; ++mode) {
      Trace t = base;
      auto& step = t.steps[pick];
      switch (mode) {
        case 0:
          if (!step.tool_call) continue;
          step.tool_call->name = "bogus_tool";
          break;
        case 1:
          if (!step.tool_call) continue;
          step.tool_call->params.push_back(42);
          break;
        case 2:
          if (step.uncertainty_flag) {
            step.guessed_answer = "x";
          } else {
            step.guessed_answer.reset();
          }
          break;
        case 3:
          step.index = step.index + 3;
          break;
        case 4:
          if (!step.observation) continue;
          step.tool_call.reset();
          break;
      }
      ComplianceReport report = validate_format(t, registry);
      CHECK(report.violations > 0);
      CHECK(report.compliance_score < 1.0);
    }
  }
}

TEST_CASE("tokenizer rule set") {
  auto tokens = tokenize("Tool(name, params) -> 22.8m");
  std::vector<std::string> texts;
  for (const auto& t : tokens) texts.push_back(t.text);
  CHECK(texts == std::vector<std::string>{"Tool", "(", "name", ",", "params", ")", "-", ">",
                                          "22.8m"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   ").empty());
}

TEST_CASE("observation mask covers exactly the observation payloads") {
  Trace t = two_step_trace();

  SUBCASE("no observations: all-true mask") {
    Trace plain = t;
    plain.steps[0].tool_call = tools::ToolCall{"get_leading_object_detection", Json::array()};
    plain.steps[0].observation.reset();
    auto mask = observation_mask(plain);
    CHECK(std::all_of(mask.begin(), mask.end(), [](bool b) { return b; }));
  }

  SUBCASE("masked token count equals the payload's token count") {
    SerializedTrace serialized = serialize_trace_with_ranges(t);
    REQUIRE(serialized.observation_ranges.size() == 1);
    auto [begin, end] = serialized.observation_ranges[0];
    std::size_t payload_tokens = tokenize(serialized.text.substr(begin, end - begin)).size();
    auto mask = observation_mask(t);
    std::size_t masked = std::count(mask.begin(), mask.end(), false);
    CHECK(masked == payload_tokens);
    CHECK(masked > 0);
  }

  SUBCASE("traces differing only in observation payloads mask to equal sequences") {
    Trace other = t;
    other.steps[0].observation =
        tools::ToolResult::ok(Json{{"id", "O9"}, {"category", "dragon"}, {"extra", 123}});
    auto tokens_of = [](const Trace& trace) {
      SerializedTrace s = serialize_trace_with_ranges(trace);
      auto tokens = tokenize(s.text);
      auto mask = observation_mask(trace);
      std::vector<std::string> kept;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (mask[i]) kept.push_back(tokens[i].text);
      }
      return kept;
    };
    CHECK(tokens_of(t) == tokens_of(other));
  }

  SUBCASE("core step fields are never masked") {
    auto mask = observation_mask(t);
    SerializedTrace serialized = serialize_trace_with_ranges(t);
    auto tokens = tokenize(serialized.text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].text == "uncertainty_flag" || tokens[i].text == "action_choice" ||
          tokens[i].text == "sub_question" || tokens[i].text == "guessed_answer") {
        CHECK(mask[i]);
      }
    }
  }
}

TEST_CASE("corpus save/load round-trips") {
  Rng rng(5);
  std::vector<Trace> traces;
  for (int i = 0; i < 20; ++i) traces.push_back(testutil::random_valid_trace(rng));
  std::string tmp = "/tmp/driveagent_corpus_test.jsonl";
  save_corpus(traces, tmp);
  auto loaded = load_corpus(tmp);
  REQUIRE(loaded.size() == traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    CHECK(serialize_trace(loaded[i]) == serialize_trace(traces[i]));
  }
}
