#include "driveagent/grpo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>

#include "driveagent/kernels.hpp"

namespace driveagent {

std::vector<double> advantage_normalize(const std::vector<double>& rewards, double std_floor) {
  if (rewards.empty()) throw Error("advantage_normalize: empty reward list");
  double mean = kernels::sum(rewards) / static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());
  double std = std::sqrt(var);
  double denom = std::max(std, std_floor);
  std::vector<double> out(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / denom;
  return out;
}

double importance_weight(double new_logprob, double old_logprob) {
  double d = new_logprob - old_logprob;
  if (std::abs(d) > 50.0) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::fprintf(stderr,
                   "warning: importance weight exponent %.3g clamped to +/-50\n", d);
    }
    d = d > 0.0 ? 50.0 : -50.0;
  }
  return std::exp(d);
}

double clipped_term(double w, double advantage, double epsilon) {
  double clipped_w = std::clamp(w, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(w * advantage, clipped_w * advantage);
}

double kl_estimate(double new_logprob, double ref_logprob) {
  double d = ref_logprob - new_logprob;  // log(rho)
  return std::exp(d) - d - 1.0;
}

std::pair<double, std::vector<double>> grpo_objective(const Policy& policy,
                                                      const Policy& old_policy,
                                                      const Policy& ref_policy,
                                                      const Catalog& catalog,
                                                      const GroupSample& group,
                                                      const GrpoConfig& config) {
  std::size_t g = group.traces.size();
  if (g == 0) throw Error("grpo_objective: empty group");
  if (group.advantages.size() != g) throw Error("grpo_objective: advantage count mismatch");

  double value = 0.0;
  std::vector<double> grad(policy.param_count(), 0.0);
  double inv_g = 1.0 / static_cast<double>(g);

  for (std::size_t i = 0; i < g; ++i) {
    const Trace& trace = group.traces[i];
    double lp_new = trace_log_prob(policy, *group.scene, *group.qa, catalog, trace);
    double lp_old = i < group.old_log_probs.size()
                        ? group.old_log_probs[i]
                        : trace_log_prob(old_policy, *group.scene, *group.qa, catalog, trace);
    double advantage = group.advantages[i];

    double w = importance_weight(lp_new, lp_old);
    double unclipped = w * advantage;
    double clipped = std::clamp(w, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon) *
                     advantage;
    value += inv_g * std::min(unclipped, clipped);

    // d(trace term)/d(theta) = coeff * d(lp_new)/d(theta)
    double coeff = 0.0;
    if (unclipped <= clipped) coeff += advantage * w;  // attained branch differentiates

    if (config.kl_beta != 0.0) {
      double rho = std::exp(std::clamp(
          trace_log_prob(ref_policy, *group.scene, *group.qa, catalog, trace) - lp_new, -50.0,
          50.0));
      value -= inv_g * config.kl_beta * (rho - std::log(rho) - 1.0);
      coeff -= config.kl_beta * (1.0 - rho);
    }
    if (coeff != 0.0) {
      trace_log_prob_grad(policy, *group.scene, *group.qa, catalog, trace, inv_g * coeff, grad);
    }
  }
  return {value, std::move(grad)};
}

GrpoResult train_grpo(LinearPolicy& policy, const std::vector<GrpoTask>& tasks,
                      const RewardWeights& weights, const GrpoConfig& config, int workers) {
  config.validate();
  weights.validate();
  if (tasks.empty()) throw Error("train_grpo: no training questions");

  const Catalog& catalog = policy.catalog();
  LinearPolicy ref_policy = policy;  // frozen at loop start

  GrpoResult result;
  std::vector<double> grad(policy.param_count());

  for (int iter = 0; iter < config.iterations; ++iter) {
    LinearPolicy old_policy = policy;  // snapshot for sampling and ratios
    std::fill(grad.begin(), grad.end(), 0.0);
    double objective = 0.0;
    double reward_sum = 0.0;
    std::size_t reward_count = 0;

    // Rollout seeds derive from the snapshot rather than the iteration
    // counter: identical policies sample identical groups (a zero learning
    // rate leaves the whole reward curve constant), while any parameter
    // change refreshes the sample paths.
    uint64_t snapshot_seed = config.seed ^ old_policy.params_hash();

    for (std::size_t q = 0; q < tasks.size(); ++q) {
      const GrpoTask& task = tasks[q];
      AgentConfig rollout;
      rollout.max_steps = config.max_steps;
      rollout.group_size = config.group_size;
      rollout.temperature = config.temperature;
      rollout.seed = snapshot_seed + 7919ULL * static_cast<uint64_t>(q);

      GroupSample group;
      group.scene = task.scene;
      group.qa = task.qa;
      group.traces = sample_group(old_policy, *task.scene, *task.qa, catalog, rollout, workers);
      for (const auto& trace : group.traces) {
        group.old_log_probs.push_back(
            trace_log_prob(old_policy, *task.scene, *task.qa, catalog, trace));
        RewardBreakdown b = total_reward(trace, task.reference, *task.qa, weights);
        group.rewards.push_back(b.total);
        reward_sum += b.total;
        ++reward_count;
      }
      group.advantages = advantage_normalize(group.rewards, config.std_floor);

      auto [value, task_grad] = grpo_objective(policy, old_policy, ref_policy, catalog, group,
                                               config);
      objective += value / static_cast<double>(tasks.size());
      kernels::axpy(1.0 / static_cast<double>(tasks.size()), task_grad, grad);
    }

    if (!std::isfinite(objective)) {
      throw Error("train_grpo: objective became non-finite at iteration " +
                  std::to_string(iter + 1));
    }

    auto params = policy.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] += config.learning_rate * grad[i];
    }

    result.reward_curve.push_back(reward_sum / static_cast<double>(reward_count));
    result.policy_hashes.push_back(policy.params_hash());
  }
  return result;
}

}  // namespace driveagent
