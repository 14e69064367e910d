#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "testutil.hpp"

#include "driveagent/datagen.hpp"
#include "driveagent/evalharness.hpp"

using namespace driveagent;
using namespace driveagent::eval;

TEST_CASE("tool overall score is the two-decimal mean of its components") {
  ToolUseScores a = ToolUseScores::from_components(70.92, 82.16, 84.25);
  CHECK(a.overall == doctest::Approx(79.11).epsilon(1e-12));
  ToolUseScores b = ToolUseScores::from_components(59.61, 73.29, 69.71);
  CHECK(b.overall == doctest::Approx(67.54).epsilon(1e-12));
  ToolUseScores c = ToolUseScores::from_components(100.0, 100.0, 100.0);
  CHECK(c.overall == 100.0);
}

TEST_CASE("binary, distance, position and bbox accuracies") {
  CHECK(acc_binary("left", "left") == 1.0);
  CHECK(acc_binary("left", "right") == 0.0);
  double mean = (acc_binary("a", "a") + acc_binary("a", "b") + acc_binary("c", "c") +
                 acc_binary("d", "d")) /
                4.0;
  CHECK(mean == doctest::Approx(0.75));

  CHECK(acc_distance(10.0, 10.0, 0.05) == 1.0);
  CHECK(acc_distance(30.0, 10.0, 0.05) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(acc_distance(10.0, 30.0, 0.05) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(acc_position(100.0, 100.0, 100.0, 100.0, 0.005) == 1.0);
  CHECK(acc_position(103.0, 104.0, 100.0, 100.0, 0.005) ==
        doctest::Approx(1.0 / 1.025).epsilon(1e-12));
  CHECK(acc_position(200.0, 0.0, 0.0, 0.0, 0.005) == doctest::Approx(0.5).epsilon(1e-12));

  Box unit{0.0, 0.0, 2.0, 2.0};
  CHECK(acc_bbox(unit, unit) == 1.0);
  CHECK(acc_bbox(unit, Box{5.0, 5.0, 6.0, 6.0}) == 0.0);
  CHECK(acc_bbox(unit, Box{1.0, 1.0, 3.0, 3.0}) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK_THROWS_AS(acc_bbox(Box{1.0, 0.0, 0.0, 1.0}, unit), Error);

  SUBCASE("strictly decreasing in the error, symmetric, translation-invariant") {
    Rng rng(3);
    double prev_d = 1.1;
    for (double err : {0.0, 1.0, 5.0, 20.0, 100.0}) {
      double v = acc_distance(10.0 + err, 10.0, 0.05);
      CHECK(v <= prev_d);
      if (err > 0.0) CHECK(v < prev_d);
      prev_d = v;
    }
    for (int i = 0; i < 100; ++i) {
      Box p{rng.uniform(-5, 0), rng.uniform(-5, 0), rng.uniform(1, 5), rng.uniform(1, 5)};
      Box t{rng.uniform(-5, 0), rng.uniform(-5, 0), rng.uniform(1, 5), rng.uniform(1, 5)};
      CHECK(acc_bbox(p, t) == doctest::Approx(acc_bbox(t, p)));
      double dx = rng.uniform(-10, 10), dy = rng.uniform(-10, 10);
      Box p2{p.x0 + dx, p.y0 + dy, p.x1 + dx, p.y1 + dy};
      Box t2{t.x0 + dx, t.y0 + dy, t.x1 + dx, t.y1 + dy};
      CHECK(acc_bbox(p2, t2) == doctest::Approx(acc_bbox(p, t)).epsilon(1e-9));
    }
  }
}

TEST_CASE("spatial aggregation: per-task means and AccS") {
  std::map<std::string, std::vector<double>> per_task;
  for (const char* task : kSpatialTasks) per_task[task] = {1.0};
  SpatialReport all_ones = aggregate_spatial(per_task);
  CHECK(all_ones.acc_s == 1.0);

  per_task.clear();
  const char* first4[] = {"lr", "fb", "rhd", "rd"};
  const char* last4[] = {"ppos", "bbox", "cvd", "cd"};
  for (const char* task : first4) per_task[task] = {0.8, 0.8};
  for (const char* task : last4) per_task[task] = {0.4};
  SpatialReport mixed = aggregate_spatial(per_task);
  CHECK(mixed.acc_s == doctest::Approx(0.6).epsilon(1e-12));

  per_task.erase("cd");
  CHECK_THROWS_WITH_AS(aggregate_spatial(per_task), doctest::Contains("cd"), Error);
}

TEST_CASE("scorecard overall is the two-decimal mean of the 12 rubric scores") {
  struct FixedJudge : Judge {
    std::map<std::string, double> values;
    std::map<std::string, double> score(const Trace&, const Scene&) const override {
      return values;
    }
  };
  FixedJudge judge;
  double example[12] = {6.0, 6.5, 7.0, 7.5, 8.0, 7.0, 8.5, 7.5, 7.0, 8.5, 8.5, 7.0};
  const auto& metrics = rubric_metrics();
  for (std::size_t i = 0; i < metrics.size(); ++i) judge.values[metrics[i]] = example[i];

  Scene s0 = fixtures::scene_s0();
  Trace dummy;
  dummy.scene_id = "s0";
  dummy.question_id = "s0-q1";
  dummy.final_answer = "A. car";

  ScoreCard card = judge_scorecard(judge, dummy, s0);
  CHECK(card.overall == doctest::Approx(7.42).epsilon(1e-12));

  for (auto& [name, v] : judge.values) v = 10.0;
  CHECK(judge_scorecard(judge, dummy, s0).overall == 10.0);
  for (auto& [name, v] : judge.values) v = 1.0;
  CHECK(judge_scorecard(judge, dummy, s0).overall == 1.0);

  SUBCASE("wrong metric set is rejected") {
    judge.values.erase(metrics[0]);
    CHECK_THROWS_AS(judge_scorecard(judge, dummy, s0), Error);
  }
  SUBCASE("out-of-range score is rejected") {
    judge.values[metrics[0]] = 11.0;
    CHECK_THROWS_AS(judge_scorecard(judge, dummy, s0), Error);
  }
}

TEST_CASE("rule judge maps oracle traces near the top of the scale") {
  const Catalog& catalog = Catalog::standard();
  Scene s0 = fixtures::scene_s0();
  fixtures::attach_reference_traces(s0);
  OracleGenerator generator(&catalog);
  RuleJudge judge(&catalog);
  for (const auto& qa : s0.qa_items) {
    Trace t = generator.propose(s0, qa, 1, 0)[0];
    ScoreCard card = judge_scorecard(judge, t, s0);
    for (const auto& [name, value] : card.scores) {
      CHECK(value >= 1.0);
      CHECK(value <= 10.0);
    }
    CHECK(card.overall == 10.0);  // ground-truth replay maxes every signal
  }
}

TEST_CASE("score_tool_use on oracle and degraded traces") {
  const Catalog& catalog = Catalog::standard();
  std::vector<Scene> scenes = {fixtures::scene_s0()};
  OracleGenerator generator(&catalog);
  std::vector<Trace> traces;
  for (const auto& qa : scenes[0].qa_items) {
    traces.push_back(generator.propose(scenes[0], qa, 1, 0)[0]);
  }

  ToolUseScores oracle_scores = score_tool_use(traces, scenes, catalog);
  CHECK(oracle_scores.appropriateness == 100.0);
  CHECK(oracle_scores.chain_coherence == 100.0);
  CHECK(oracle_scores.perception_alignment == 100.0);
  CHECK(oracle_scores.overall == 100.0);

  // swap one tool call to a subquestion-mismatched tool with foreign params
  traces[0].steps[0].tool_call =
      tools::ToolCall{"get_object_detections_in_range", Json::array({-500.0, 500.0, -500.0, 500.0})};
  traces[0].steps[0].observation = tools::default_registry().dispatch(
      scenes[0], *traces[0].steps[0].tool_call);
  ToolUseScores degraded = score_tool_use(traces, scenes, catalog);
  CHECK(degraded.appropriateness < 100.0);
  CHECK(degraded.perception_alignment < 100.0);
  CHECK(degraded.overall ==
        doctest::Approx(round2((degraded.appropriateness + degraded.chain_coherence +
                                degraded.perception_alignment) /
                               3.0)));

  CHECK_THROWS_AS(score_tool_use({}, scenes, catalog), Error);
}

TEST_CASE("evaluate_run: oracle corpus scores MCQ 1.0") {
  const Catalog& catalog = Catalog::standard();
  std::vector<Scene> scenes = {fixtures::scene_s0(), fixtures::scene_s1()};
  OracleGenerator generator(&catalog);
  std::vector<Trace> traces;
  for (const auto& scene : scenes) {
    for (const auto& qa : scene.qa_items) {
      traces.push_back(generator.propose(scene, qa, 1, 0)[0]);
    }
  }
  EvalReport report = evaluate_run(traces, scenes, catalog);
  CHECK(report.mcq_accuracy == 1.0);
  CHECK(report.num_traces == traces.size());
  CHECK(!report.spatial.has_value());
  CHECK(report.scorecards.empty());

  SUBCASE("corrupting half the answers halves the accuracy") {
    for (std::size_t i = 0; i < traces.size(); i += 2) {
      traces[i].final_answer = "Z. wrong";
    }
    EvalReport half = evaluate_run(traces, scenes, catalog);
    CHECK(half.mcq_accuracy == doctest::Approx(0.5));
  }
  SUBCASE("empty corpus is an error") {
    CHECK_THROWS_AS(evaluate_run({}, scenes, catalog), Error);
  }
}

TEST_CASE("evaluate_run emits the spatial section when all tasks have items") {
  const Catalog& catalog = Catalog::standard();
  Scene scene = fixtures::scene_s0();
  scene.qa_items.clear();

  struct SpatialCase {
    const char* task;
    const char* truth;
    const char* prediction;
    double expected;
  };
  SpatialCase cases[] = {
      {"lr", "left", "left", 1.0},
      {"fb", "front", "back", 0.0},
      {"rhd", "10", "30", 0.5},
      {"rd", "10", "10", 1.0},
      {"ppos", "100,100", "103,104", 1.0 / 1.025},
      {"bbox", "1,1,3,3", "0,0,2,2", 1.0 / 7.0},
      {"cvd", "5", "5", 1.0},
      {"cd", "0", "20", 0.5},
  };

  std::vector<Trace> traces;
  int n = 0;
  for (const auto& c : cases) {
    QAItem qa;
    qa.id = std::string("spatial.") + c.task + "." + std::to_string(n++);
    qa.question = "spatial probe";
    qa.ground_truth_answer = c.truth;
    scene.qa_items.push_back(qa);

    Trace t;
    t.scene_id = scene.id;
    t.question_id = qa.id;
    t.final_answer = c.prediction;
    traces.push_back(t);
  }

  EvalReport report = evaluate_run(traces, {scene}, catalog);
  REQUIRE(report.spatial.has_value());
  double expected_acc_s = 0.0;
  for (const auto& c : cases) {
    CHECK(report.spatial->task_means.at(c.task) == doctest::Approx(c.expected).epsilon(1e-9));
    expected_acc_s += c.expected;
  }
  CHECK(report.spatial->acc_s == doctest::Approx(expected_acc_s / 8.0).epsilon(1e-9));
}
