#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "testutil.hpp"

#include "driveagent/reward.hpp"

using namespace driveagent;

namespace {

ReasoningStep make_step(int index, const std::string& subq, bool tool, ActionChoice ac,
                        const std::string& answer = "") {
  ReasoningStep s;
  s.index = index;
  s.sub_question = subq;
  s.uncertainty_flag = tool;
  s.action_choice = ac;
  if (tool) {
    s.tool_call = tools::ToolCall{"get_leading_object_detection", Json::array()};
    s.observation = tools::ToolResult::ok(Json{{"id", "O1"}, {"category", "car"}});
  } else {
    s.guessed_answer = answer;
  }
  return s;
}

Trace reference_trace() {
  Trace t;
  t.scene_id = "s0";
  t.question_id = "q";
  t.steps = {make_step(1, "What is the leading object?", true,
                       ActionChoice::continue_reasoning),
             make_step(2, "What is the leading object?", false, ActionChoice::conclude,
                       "A. car O1")};
  t.final_answer = "A. car O1";
  return t;
}

}  // namespace

TEST_CASE("final answer reward: normalization and option labels") {
  std::vector<QAOption> options = {{"A", "car"}, {"B", "pedestrian"}, {"C", "bicycle"},
                                   {"D", "none"}};
  CHECK(final_answer_reward("B", "B", options) == 1.0);
  CHECK(final_answer_reward("A", "B", options) == 0.0);
  CHECK(final_answer_reward("Answer: b.", "B", options) == 1.0);
  CHECK(final_answer_reward("A. car", "A", options) == 1.0);
  CHECK(final_answer_reward("pedestrian", "B", options) == 1.0);  // option text resolves
  CHECK(final_answer_reward(" yes ", "YES", {}) == 1.0);
  CHECK(final_answer_reward("yes", "no", {}) == 0.0);
}

TEST_CASE("step matching: coverage times ordering") {
  Trace ref = reference_trace();

  SUBCASE("identical traces score 1") {
    CHECK(step_matching_reward(ref, ref) == doctest::Approx(1.0));
  }
  SUBCASE("reversed steps: full coverage, zero order") {
    Trace rev = ref;
    std::swap(rev.steps[0], rev.steps[1]);
    rev.steps[0].index = 1;
    rev.steps[1].index = 2;
    CHECK(step_matching_reward(rev, ref) == doctest::Approx(0.0));
  }
  SUBCASE("half coverage in order scores 0.5") {
    Trace half = ref;
    half.steps = {ref.steps[1]};
    half.steps[0].index = 1;
    CHECK(step_matching_reward(half, ref) == doctest::Approx(0.5));
  }
  SUBCASE("empty reference is an error") {
    Trace empty;
    CHECK_THROWS_AS(step_matching_reward(ref, empty), Error);
  }
}

TEST_CASE("coherence: transition validity") {
  SUBCASE("single-step trace is vacuously coherent") {
    Trace t;
    t.steps = {make_step(1, "q", false, ActionChoice::conclude, "a")};
    t.final_answer = "a";
    CHECK(coherence_reward(t) == 1.0);
  }
  SUBCASE("referenced observations keep transitions valid") {
    Trace t = reference_trace();
    CHECK(coherence_reward(t) == 1.0);
  }
  SUBCASE("an unreferenced observation invalidates one of two transitions") {
    Trace t;
    t.steps = {make_step(1, "q1", true, ActionChoice::continue_reasoning),
               make_step(2, "completely unrelated", false, ActionChoice::continue_reasoning,
                         "nothing relevant"),
               make_step(3, "q3", false, ActionChoice::conclude, "still nothing")};
    t.final_answer = "still nothing";
    CHECK(coherence_reward(t) == doctest::Approx(0.5));
  }
  SUBCASE("derived values reference their observation") {
    Trace t;
    ReasoningStep s1 = make_step(1, "q", true, ActionChoice::continue_reasoning);
    s1.tool_call = tools::ToolCall{
        "get_drivable_at_locations", Json::array({Json::array({Json::array({-4.0, 0.0})})})};
    s1.observation = tools::ToolResult::ok(Json::array({true}));
    ReasoningStep s2 = make_step(2, "q", false, ActionChoice::conclude, "A. yes");
    t.steps = {s1, s2};
    t.final_answer = "A. yes";
    CHECK(coherence_reward(t) == 1.0);
  }
}

TEST_CASE("integration quality: referenced observations ratio") {
  Trace all_used = reference_trace();
  CHECK(integration_quality_reward(all_used) == 1.0);

  Trace none;
  none.steps = {make_step(1, "q", true, ActionChoice::continue_reasoning),
                make_step(2, "other", false, ActionChoice::conclude, "unrelated")};
  none.final_answer = "unrelated";
  CHECK(integration_quality_reward(none) == 0.0);

  Trace half;
  half.steps = {make_step(1, "q", true, ActionChoice::continue_reasoning),
                make_step(2, "mentions car", false, ActionChoice::continue_reasoning, "car ahead")};
  auto unused = make_step(3, "q3", true, ActionChoice::continue_reasoning);
  unused.tool_call = tools::ToolCall{"get_nearest_pedestrian_crossing", Json::array()};
  unused.observation = tools::ToolResult::ok(Json{{"x", 77.0}, {"y", 88.0}});
  half.steps.push_back(unused);
  half.steps.push_back(make_step(4, "q4", false, ActionChoice::conclude, "unrelated words"));
  half.final_answer = "unrelated words";
  CHECK(integration_quality_reward(half) == doctest::Approx(0.5));

  Trace no_tools;
  no_tools.steps = {make_step(1, "q", false, ActionChoice::conclude, "a")};
  no_tools.final_answer = "a";
  CHECK(integration_quality_reward(no_tools) == 1.0);
}

TEST_CASE("total reward composes the weighted components") {
  RewardWeights weights;
  Scene s0 = fixtures::scene_s0();
  const QAItem& qa = s0.qa_items[0];
  Trace ref = reference_trace();
  ref.final_answer = "A. car";
  ref.steps[1].guessed_answer = "A. car";

  SUBCASE("perfect trace scores 1.0") {
    RewardBreakdown b = total_reward(ref, ref, qa, weights);
    CHECK(b.answer == 1.0);
    CHECK(b.step_match == 1.0);
    CHECK(b.coherence == 1.0);
    CHECK(b.format == 1.0);
    CHECK(b.integration == 1.0);
    CHECK(b.total == doctest::Approx(1.0));
  }
  SUBCASE("components (1,0,1,1,1) give 0.85 under default weights") {
    // candidate answers correctly but shares no steps with the reference
    Trace cand;
    cand.scene_id = "s0";
    cand.question_id = qa.id;
    auto step = make_step(1, "What is the lane category at the ego position?", false,
                          ActionChoice::conclude, "A. car");
    cand.steps = {step};
    cand.final_answer = "A. car";
    RewardBreakdown b = total_reward(cand, ref, qa, weights);
    CHECK(b.answer == 1.0);
    CHECK(b.step_match == 0.0);
    CHECK(b.coherence == 1.0);
    CHECK(b.format == 1.0);
    CHECK(b.integration == 1.0);
    CHECK(b.total == doctest::Approx(0.85));
  }
  SUBCASE("all-zero components give 0") {
    RewardBreakdown zero;
    CHECK(zero.total == 0.0);
  }
  SUBCASE("total is monotone in each component") {
    RewardBreakdown base;
    base.answer = 0.5;
    base.step_match = 0.5;
    base.coherence = 0.5;
    base.format = 0.5;
    base.integration = 0.5;
    auto total_of = [&](RewardBreakdown b) {
      return weights.answer * b.answer + weights.step_match * b.step_match +
             weights.coherence * b.coherence + weights.format * b.format +
             weights.integration * b.integration;
    };
    double t0 = total_of(base);
    for (double RewardBreakdown::*field :
         {&RewardBreakdown::answer, &RewardBreakdown::step_match, &RewardBreakdown::coherence,
          &RewardBreakdown::format, &RewardBreakdown::integration}) {
      RewardBreakdown up = base;
      up.*field = 0.9;
      CHECK(total_of(up) > t0);
    }
  }
}

TEST_CASE("reward weights validation") {
  RewardWeights bad;
  bad.answer = 0.9;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.answer = -0.1;
  CHECK_THROWS_AS(bad.validate(), Error);
  RewardWeights good;
  CHECK_NOTHROW(good.validate());
}

TEST_CASE("rewards are pure: repeated evaluation is bit-identical") {
  Scene s0 = fixtures::scene_s0();
  const QAItem& qa = s0.qa_items[0];
  Trace ref = reference_trace();
  ref.final_answer = "A. car";
  ref.steps[1].guessed_answer = "A. car";
  RewardWeights weights;
  RewardBreakdown a = total_reward(ref, ref, qa, weights);
  RewardBreakdown b = total_reward(ref, ref, qa, weights);
  CHECK(a.total == b.total);
  CHECK(a.answer == b.answer);
  CHECK(a.step_match == b.step_match);
  CHECK(a.coherence == b.coherence);
  CHECK(a.format == b.format);
  CHECK(a.integration == b.integration);
}

TEST_CASE("all components stay in [0,1] on random valid traces") {
  Rng rng(31);
  Trace ref = reference_trace();
  Scene s0 = fixtures::scene_s0();
  const QAItem& qa = s0.qa_items[0];
  RewardWeights weights;
  for (int trial = 0; trial < 100; ++trial) {
    Trace t = testutil::random_valid_trace(rng);
    RewardBreakdown b = total_reward(t, ref, qa, weights);
    for (double v : {b.answer, b.step_match, b.coherence, b.format, b.integration, b.total}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}
