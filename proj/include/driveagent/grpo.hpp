#pragma once

#include <span>
#include <utility>
#include <vector>

#include "driveagent/policy.hpp"
#include "driveagent/reward.hpp"
#include "driveagent/runtime.hpp"

namespace driveagent {

struct GrpoConfig {
  int group_size = 2;
  double clip_epsilon = 0.2;
  double kl_beta = 0.001;
  double learning_rate = 0.1;
  int iterations = 1;
  double temperature = 1.2;
  double std_floor = 1e-8;
  int max_steps = kDefaultMaxSteps;
  uint64_t seed = 0;

  void validate() const {
    if (group_size < 2) throw Error("grpo config: group_size must be >= 2");
    if (!(clip_epsilon > 0.0)) throw Error("grpo config: clip_epsilon must be > 0");
    if (kl_beta < 0.0) throw Error("grpo config: kl_beta must be >= 0");
    if (iterations < 1) throw Error("grpo config: iterations must be >= 1");
    if (!(temperature > 0.0)) throw Error("grpo config: temperature must be > 0");
    if (!(std_floor > 0.0)) throw Error("grpo config: std_floor must be > 0");
  }
};

/// One group of rollouts for a question with their rewards and advantages.
struct GroupSample {
  const Scene* scene = nullptr;
  const QAItem* qa = nullptr;
  std::vector<Trace> traces;
  std::vector<double> old_log_probs;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

/// (r_i - mean(r)) / max(std(r), std_floor) with the population standard
/// deviation; all-equal rewards map to all-zero advantages.
std::vector<double> advantage_normalize(const std::vector<double>& rewards,
                                        double std_floor = 1e-8);

/// exp(new - old), with the exponent clamped to |50| (a warning is printed
/// once per process when the clamp engages).
double importance_weight(double new_logprob, double old_logprob);

/// min(w * A, clip(w, 1 - eps, 1 + eps) * A)
double clipped_term(double w, double advantage, double epsilon);

/// Non-negative estimator rho - log(rho) - 1 with rho = exp(ref - new).
double kl_estimate(double new_logprob, double ref_logprob);

/// Objective value (to ascend) and its gradient in the current policy's
/// parameters: mean_i [ clipped_term_i - beta * kl_i ]. The min/clip kinks
/// differentiate through the attained branch.
std::pair<double, std::vector<double>> grpo_objective(const Policy& policy,
                                                      const Policy& old_policy,
                                                      const Policy& ref_policy,
                                                      const Catalog& catalog,
                                                      const GroupSample& group,
                                                      const GrpoConfig& config);

/// One training question: scene, QA item and the reference trace feeding the
/// step-matching reward.
struct GrpoTask {
  const Scene* scene = nullptr;
  const QAItem* qa = nullptr;
  Trace reference;
};

struct GrpoResult {
  std::vector<double> reward_curve;       // mean group reward per iteration
  std::vector<uint64_t> policy_hashes;    // post-update hash per iteration
};

/// Full loop: per iteration snapshot the old policy, sample a group per task
/// from it, score with the reward engine, normalize advantages within each
/// group, ascend the mean objective. The reference policy for the KL term is
/// frozen at loop start. Deterministic given config.seed.
GrpoResult train_grpo(LinearPolicy& policy, const std::vector<GrpoTask>& tasks,
                      const RewardWeights& weights, const GrpoConfig& config, int workers = 1);

}  // namespace driveagent
