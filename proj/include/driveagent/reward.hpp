#pragma once

#include <string>
#include <vector>

#include "driveagent/scene.hpp"
#include "driveagent/tools.hpp"
#include "driveagent/trace.hpp"

namespace driveagent {

struct RewardWeights {
  double answer = 0.5;
  double step_match = 0.15;
  double coherence = 0.15;
  double format = 0.1;
  double integration = 0.1;

  void validate() const;
};

struct RewardBreakdown {
  double answer = 0.0;
  double step_match = 0.0;
  double coherence = 0.0;
  double format = 0.0;
  double integration = 0.0;
  double total = 0.0;

  Json to_json(const RewardWeights& weights) const;
};

/// 1 iff the normalized answers match: trim + casefold, and with options
/// present both sides are reduced to an option label (rightmost label token,
/// else option-text match).
double final_answer_reward(const std::string& predicted, const std::string& ground_truth,
                           const std::vector<QAOption>& options);

/// coverage x order. Coverage: greedily matched reference steps (same tool
/// name and sub-question, one-to-one, in candidate order) over the reference
/// step count. Order: 1 - inversions among matched reference indices over
/// k(k-1)/2; fewer than two matches count as perfectly ordered.
/// Throws Error on an empty reference.
double step_matching_reward(const Trace& candidate, const Trace& reference);

/// Valid transitions over total transitions. A transition t -> t+1 is valid
/// iff step t is not a conclude step, step t's observation (if any) is
/// referenced by step t+1's text, and step t satisfies the
/// uncertainty/answer coupling. Traces with fewer than two steps score 1.
double coherence_reward(const Trace& trace);

/// validate_format compliance score.
double format_compliance_reward(const Trace& trace, const tools::Registry& registry);

/// Referenced observations over total observations; no observations scores 1.
double integration_quality_reward(const Trace& trace);

/// Reference rule shared by coherence, integration and the tool-use metrics.
/// A text references an observation iff it shares a token with the
/// observation's value tokens (stringified primitive payload leaves) or with
/// any catalog extraction of the producing call; numeric tokens match within
/// 0.5 (the audit tolerance), everything else case-insensitively.
bool observation_referenced_by(const tools::ToolCall* call,
                               const tools::ToolResult& observation, const std::string& text);

RewardBreakdown total_reward(const Trace& trace, const Trace& reference, const QAItem& qa,
                             const RewardWeights& weights,
                             const tools::Registry& registry = tools::default_registry());

}  // namespace driveagent
