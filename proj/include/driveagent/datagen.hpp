#pragma once

#include <memory>
#include <string>
#include <vector>

#include "driveagent/policy.hpp"
#include "driveagent/runtime.hpp"

namespace driveagent {

/// Proposes N candidate reasoning traces for a QA pair.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::vector<Trace> propose(const Scene& scene, const QAItem& qa, int n,
                                     uint64_t seed) const = 0;
};

/// Ground-truth-backed generator: replays the oracle policy. Sample 0 is the
/// plain two-step trace (tool call, then conclude); later samples prepend
/// directly-answered context sub-questions for length variety.
class OracleGenerator : public Generator {
 public:
  explicit OracleGenerator(const Catalog* catalog, int max_steps = kDefaultMaxSteps);
  std::vector<Trace> propose(const Scene& scene, const QAItem& qa, int n,
                             uint64_t seed) const override;

 private:
  const Catalog* catalog_;
  int max_steps_;
};

/// Wraps a generator and corrupts the first observation of a seeded fraction
/// of its traces (numeric leaves shifted, strings tagged, booleans flipped).
/// Tracks how many traces it corrupted; audits must prune exactly those.
class FaultInjectingGenerator : public Generator {
 public:
  FaultInjectingGenerator(const Generator* inner, double fault_rate);
  std::vector<Trace> propose(const Scene& scene, const QAItem& qa, int n,
                             uint64_t seed) const override;
  std::size_t faults_injected() const { return faults_; }

 private:
  const Generator* inner_;
  double fault_rate_;
  mutable std::size_t faults_ = 0;
};

struct AuditFinding {
  int step_index = 0;
  std::string kind;  // "factual" or "consistency"
  std::string message;
};

struct AuditReport {
  bool factual_ok = true;
  bool consistency_ok = true;
  std::vector<AuditFinding> findings;
  bool keep() const { return factual_ok && consistency_ok; }
};

/// Factual check: every recorded observation equals a fresh dispatch of its
/// tool call; every guessed answer for a catalog sub-question matches the
/// value derivable from the scene (0.5 m tolerance for numeric answers).
/// Consistency check: trace invariants, uncertainty/answer coupling, and the
/// final answer agreeing with the last guessed answer and the option set.
AuditReport audit_trace(const Trace& trace, const Scene& scene, const QAItem& qa,
                        const Catalog& catalog);

struct CorpusStats {
  std::size_t proposed = 0;
  std::size_t kept = 0;
  std::size_t pruned_factual = 0;
  std::size_t pruned_consistency = 0;
  Json to_json() const;
};

/// Proposes N traces per QA pair across all scenes, audits each, writes the
/// kept traces as JSONL ordered by (scene id, qa id, sample index).
CorpusStats build_corpus(const Generator& generator, const std::vector<Scene>& scenes, int n,
                         uint64_t seed, const std::string& out_path, const Catalog& catalog,
                         int workers = 1);

/// Adapter for an external proposal service: POST {scene_id, question_id,
/// question, options, n, seed} and expect {"traces": [...]} with the trace
/// line schema. Excluded from acceptance runs.
class HttpGenerator : public Generator {
 public:
  explicit HttpGenerator(std::string url);
  std::vector<Trace> propose(const Scene& scene, const QAItem& qa, int n,
                             uint64_t seed) const override;

 private:
  std::string url_;
};

}  // namespace driveagent
