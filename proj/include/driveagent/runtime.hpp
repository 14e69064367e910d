#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "driveagent/policy.hpp"

namespace driveagent {

struct AgentConfig {
  int max_steps = kDefaultMaxSteps;
  int group_size = 2;
  double temperature = 1.2;
  uint64_t seed = 0;

  void validate() const {
    if (max_steps < 1) throw Error("agent config: max_steps must be >= 1");
    if (group_size < 1) throw Error("agent config: group_size must be >= 1");
    if (!(temperature > 0.0)) throw Error("agent config: temperature must be > 0");
  }
};

/// Runs one episode: sample a template per step, dispatch the tool on
/// uncertain steps and inject the observation (dispatch errors are recorded
/// as observations, never abort), stop on conclude or force-conclude at the
/// step cap. The final answer is the last guessed answer, or a terminal
/// answer-slot sample when no step guessed one.
Trace run_episode(const Policy& policy, const Scene& scene, const QAItem& qa,
                  const Catalog& catalog, const AgentConfig& config, uint64_t seed);

/// G independent episodes with per-member seeds config.seed + i.
std::vector<Trace> sample_group(const Policy& policy, const Scene& scene, const QAItem& qa,
                                const Catalog& catalog, const AgentConfig& config,
                                int workers = 1);

/// Maps a recorded step back onto its template. Forced-conclude steps map to
/// the continue variant the policy actually sampled. Throws Error for steps
/// outside the catalog space.
StepTemplate template_of(const ReasoningStep& step, const Catalog& catalog);

/// Log-probability of a recorded trace under a policy: template choices plus
/// every sampled answer slot (guessed answers and the terminal slot).
double trace_log_prob(const Policy& policy, const Scene& scene, const QAItem& qa,
                      const Catalog& catalog, const Trace& trace);

/// Adds coeff * d(trace_log_prob)/d(theta) into grad.
void trace_log_prob_grad(const Policy& policy, const Scene& scene, const QAItem& qa,
                         const Catalog& catalog, const Trace& trace, double coeff,
                         std::span<double> grad);

}  // namespace driveagent
