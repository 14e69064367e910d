#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "driveagent/catalog.hpp"
#include "driveagent/reward.hpp"
#include "driveagent/scene.hpp"
#include "driveagent/trace.hpp"

namespace driveagent::eval {

// ---- tool-use metrics ----

struct ToolUseScores {
  double appropriateness = 0.0;     // 0-100
  double chain_coherence = 0.0;     // 0-100
  double perception_alignment = 0.0;  // 0-100
  double overall = 0.0;             // mean of the three, two decimals

  static ToolUseScores from_components(double appropriateness, double chain_coherence,
                                       double perception_alignment);
  Json to_json() const;
};

/// Appropriateness: fraction of tool calls whose result is referenced
/// downstream and whose tool matches the step's sub-question per the catalog.
/// Chain coherence: mean coherence reward. Perception alignment: fraction of
/// calls whose params stay within the scene's extents, ids and categories.
/// All reported on a 0-100 scale, two decimals.
ToolUseScores score_tool_use(const std::vector<Trace>& traces, const std::vector<Scene>& scenes,
                             const Catalog& catalog);

/// Whether a call's parameters lie within the scene's perceived extents and
/// categories (positions inside the occupancy/map extents, ids and category
/// words present in the scene, plan timesteps inside the prediction horizon).
bool call_params_aligned(const tools::ToolCall& call, const Scene& scene);

// ---- spatial metrics ----

struct SpatialMetricConfig {
  double alpha_d = 0.05;
  double alpha_p = 0.005;
};

/// 1 iff the labels match.
double acc_binary(const std::string& prediction, const std::string& truth);

/// 1 / (1 + alpha_d * |d - d_gt|)
double acc_distance(double predicted, double truth, double alpha_d);

/// 1 / (1 + alpha_p * ||p - p_gt||_2)
double acc_position(double px, double py, double tx, double ty, double alpha_p);

struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;  // min/max per axis
};

/// Intersection over union; disjoint boxes score 0. Throws Error for
/// malformed boxes (min >= max on an axis).
double acc_bbox(const Box& predicted, const Box& truth);

inline const char* kSpatialTasks[8] = {"lr", "fb", "rhd", "rd", "ppos", "bbox", "cvd", "cd"};

struct SpatialReport {
  std::map<std::string, double> task_means;  // one entry per task
  double acc_s = 0.0;                        // unweighted mean of the 8 means
  Json to_json() const;
};

/// Per-task means plus AccS. Throws Error naming any missing or empty task.
SpatialReport aggregate_spatial(const std::map<std::string, std::vector<double>>& per_task);

// ---- reasoning-quality judge ----

/// The 12 rubric metrics, in scoring order.
const std::vector<std::string>& rubric_metrics();
/// Rubric prompt shipped to the external judge adapter.
const std::string& rubric_prompt();

struct ScoreCard {
  std::vector<std::pair<std::string, double>> scores;  // rubric order
  double overall = 0.0;                                // mean, two decimals
  Json to_json() const;
};

class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::map<std::string, double> score(const Trace& trace, const Scene& scene) const = 0;
};

/// Deterministic judge: maps audit findings, reward components and trace
/// statistics onto the rubric via fixed linear scalings (1 + 9 * signal).
class RuleJudge : public Judge {
 public:
  explicit RuleJudge(const Catalog* catalog);
  std::map<std::string, double> score(const Trace& trace, const Scene& scene) const override;

 private:
  const Catalog* catalog_;
};

/// Adapter posting the rubric prompt and the trace to an external scoring
/// service; expects the 12-score JSON back.
class HttpJudge : public Judge {
 public:
  explicit HttpJudge(std::string url);
  std::map<std::string, double> score(const Trace& trace, const Scene& scene) const override;

 private:
  std::string url_;
};

/// Validates the judge's metric set and ranges, orders the scores by the
/// rubric, computes the overall as their mean (two decimals).
ScoreCard judge_scorecard(const Judge& judge, const Trace& trace, const Scene& scene);

// ---- combined run evaluation ----

struct EvalOptions {
  const Judge* judge = nullptr;  // scorecards only when configured
  SpatialMetricConfig spatial;
};

struct EvalReport {
  double mcq_accuracy = 0.0;
  std::size_t num_traces = 0;
  ToolUseScores tool_use;
  std::optional<SpatialReport> spatial;
  std::vector<ScoreCard> scorecards;
  Json to_json() const;
};

/// MCQ accuracy (mean final-answer reward), tool-use scores, the spatial
/// section when every spatial task has predictions (question ids
/// "spatial.<task>.<n>"), and per-trace scorecards when a judge is
/// configured. Throws Error on an empty corpus.
EvalReport evaluate_run(const std::vector<Trace>& traces, const std::vector<Scene>& scenes,
                        const Catalog& catalog, const EvalOptions& options = {});

}  // namespace driveagent::eval
