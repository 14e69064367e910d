#pragma once

#include <span>
#include <vector>

#include "driveagent/policy.hpp"
#include "driveagent/runtime.hpp"

namespace driveagent {

/// Training tuple: a reasoning trace resolved against its scene and question.
struct DatasetItem {
  const Scene* scene = nullptr;
  const QAItem* qa = nullptr;
  Trace trace;
};

/// Resolves corpus traces against loaded scenes; throws when a reference
/// does not resolve.
std::vector<DatasetItem> resolve_items(const std::vector<Trace>& traces,
                                       const std::vector<Scene>& scenes);

struct SftConfig {
  int phase = 1;  // 1: templates only; 2: templates + observation grounding
  double learning_rate = 0.1;
  int epochs = 1;
  int batch_size = 16;
  uint64_t seed = 0;

  void validate() const {
    if (phase != 1 && phase != 2) throw Error("sft config: phase must be 1 or 2");
    if (!(learning_rate >= 0.0)) throw Error("sft config: learning_rate must be >= 0");
    if (epochs < 1) throw Error("sft config: epochs must be >= 1");
    if (batch_size < 1) throw Error("sft config: batch_size must be >= 1");
  }
};

struct LossReport {
  double mean_nll = 0.0;          // total NLL / unit count
  std::size_t unit_count = 0;     // phase 1: step templates; phase 2: + slots
  std::size_t item_count = 0;
  std::vector<double> per_item;   // per-item NLL sums
};

/// Phase 1: mean negative log-probability of the step templates only.
/// Observation content never enters (the mask is structural: templates do not
/// condition on payloads), so the loss is invariant to observation payloads.
LossReport sft_loss_phase1(const Policy& policy, const std::vector<DatasetItem>& items,
                           const Catalog& catalog);

/// Phase 2: adds one observation-conditioned answer slot per observation,
/// targeting the next guessed answer after it (or the final answer).
LossReport sft_loss_phase2(const Policy& policy, const std::vector<DatasetItem>& items,
                           const Catalog& catalog);

/// Accumulates the gradient of the selected phase's mean loss into grad
/// (which must be zeroed by the caller) and returns the loss report.
LossReport sft_loss_grad(const Policy& policy, const std::vector<DatasetItem>& items,
                         const Catalog& catalog, int phase, std::span<double> grad);

struct SftResult {
  std::vector<double> loss_curve;  // [0] = initial loss, then one entry per epoch
};

/// Plain gradient descent on the selected phase loss. Throws Error with
/// diagnostics if the loss turns non-finite.
SftResult train_sft(LinearPolicy& policy, const std::vector<DatasetItem>& items,
                    const SftConfig& config);

}  // namespace driveagent
