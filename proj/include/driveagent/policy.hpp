#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "driveagent/catalog.hpp"
#include "driveagent/scene.hpp"
#include "driveagent/trace.hpp"
#include "driveagent/util.hpp"

namespace driveagent {

inline constexpr int kMaxAnswerChoices = 8;
// Step-position features normalize against this constant, not the configured
// cap, so feature vectors stay comparable across configs.
inline constexpr double kStepFeatureScale = 8.0;

/// Discrete step choice: a tool invocation from the catalog or none, a
/// sub-question, and continue/conclude. The uncertainty flag is derived:
/// a step is uncertain exactly when it invokes a tool. Concluding means
/// emitting an answer now, so tool-invoking (uncertain, answer-blank) steps
/// never conclude; the space per sub-question is {no-tool+continue,
/// no-tool+conclude, one continue variant per invocation}.
struct StepTemplate {
  int invocation = -1;    // -1 = no tool, else index into catalog invocations
  int sub_question = 0;   // index into catalog entries
  bool conclude = false;

  bool uses_tool() const { return invocation >= 0; }
  friend bool operator==(const StepTemplate&, const StepTemplate&) = default;
};

/// Enumeration of the finite template space induced by a catalog:
/// sub-questions x (invocations + 2). Tool+conclude combinations are not in
/// the space; index_of returns -1 for them.
class TemplateSpace {
 public:
  explicit TemplateSpace(const Catalog& catalog);
  int count() const { return count_; }
  StepTemplate at(int k) const;
  int index_of(const StepTemplate& t) const;

 private:
  int num_invocations_;
  int num_subqs_;
  int count_;
};

struct PolicyContext {
  const Scene* scene = nullptr;
  const QAItem* qa = nullptr;
  const Trace* prefix = nullptr;  // steps generated so far
  std::vector<double> features;   // featurize() output; all a LinearPolicy sees
};

/// Context for filling a guessed answer or the final answer.
struct AnswerSlot {
  std::vector<QAOption> choices;  // qa options, or Catalog::fallback_answers()
  std::string sub_question;       // current step's sub-question text
  const tools::ToolCall* source_call = nullptr;      // call that produced the observation
  const tools::ToolResult* observation = nullptr;    // most recent observation, if any
  const Scene* scene = nullptr;
  const QAItem* qa = nullptr;
};

/// Deterministic scene+question featurization. Layout:
///   [0] bias 1.0
///   [1] object count / 10
///   [2] leading-object forward distance / 40, or -1 sentinel
///   [3] occupancy-free corridor width fraction ahead of the ego at t=0
///   [4] nearest-crossing distance / 40, or -1 sentinel
///   [5 .. 5+S)  one-hot of the catalog entry matching the question
///   [5+S] prefix length / kStepFeatureScale
///   [6+S] any observation so far
///   [7+S] last step carries an observation
std::vector<double> featurize(const Scene& scene, const QAItem& qa, const Trace& prefix,
                              const Catalog& catalog);
std::size_t feature_count(const Catalog& catalog);

PolicyContext make_context(const Scene& scene, const QAItem& qa, const Trace& prefix,
                           const Catalog& catalog);

/// Distribution over step templates plus a distribution over answer-slot
/// choices. exp(log_prob) sums to 1 over the template space for any context;
/// gradients accumulate into the caller's buffer.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::size_t param_count() const = 0;
  virtual std::span<double> params() = 0;
  virtual std::span<const double> params() const = 0;

  virtual double log_prob(const PolicyContext& ctx, const StepTemplate& t) const = 0;
  virtual void grad_log_prob(const PolicyContext& ctx, const StepTemplate& t, double coeff,
                             std::span<double> grad) const = 0;
  virtual StepTemplate sample(const PolicyContext& ctx, double temperature, Rng& rng) const = 0;

  virtual double answer_log_prob(const AnswerSlot& slot, int choice) const = 0;
  virtual void grad_answer_log_prob(const AnswerSlot& slot, int choice, double coeff,
                                    std::span<double> grad) const = 0;
  virtual int sample_answer(const AnswerSlot& slot, double temperature, Rng& rng) const = 0;
};

/// Softmax-linear policy over the template space. Template head: one weight
/// row per template against the context features. Answer head: per-choice
/// logits from a choice-index prior plus a token-overlap feature between the
/// choice text and the serialized observation values.
class LinearPolicy : public Policy {
 public:
  explicit LinearPolicy(const Catalog* catalog);

  const Catalog& catalog() const { return *catalog_; }
  const TemplateSpace& templates() const { return space_; }
  std::size_t feature_dim() const { return feature_dim_; }

  std::size_t param_count() const override { return params_.size(); }
  std::span<double> params() override { return params_; }
  std::span<const double> params() const override { return params_; }

  double log_prob(const PolicyContext& ctx, const StepTemplate& t) const override;
  void grad_log_prob(const PolicyContext& ctx, const StepTemplate& t, double coeff,
                     std::span<double> grad) const override;
  StepTemplate sample(const PolicyContext& ctx, double temperature, Rng& rng) const override;

  double answer_log_prob(const AnswerSlot& slot, int choice) const override;
  void grad_answer_log_prob(const AnswerSlot& slot, int choice, double coeff,
                            std::span<double> grad) const override;
  int sample_answer(const AnswerSlot& slot, double temperature, Rng& rng) const override;

  /// Template probabilities for a context (temperature 1); diagnostics and
  /// the learning regression read these.
  std::vector<double> template_probs(const PolicyContext& ctx) const;

  /// Answer-head bias so tool results dominate choice priors; used to
  /// initialize extraction-competent policies.
  void set_answer_overlap_weight(double w);

  uint64_t params_hash() const;
  void save(const std::string& path) const;
  static LinearPolicy load(const std::string& path, const Catalog* catalog);

 private:
  std::vector<double> template_logits(const PolicyContext& ctx) const;
  std::vector<double> answer_logits(const AnswerSlot& slot) const;
  static std::vector<double> answer_features(const AnswerSlot& slot, int choice);

  const Catalog* catalog_;
  TemplateSpace space_;
  std::size_t feature_dim_;
  std::size_t answer_dim_;
  std::vector<double> params_;  // [K x D template rows | answer head]
};

/// Replays a fixed template script (clamping to the last entry) and answers
/// with a fixed choice index. Deterministic; zero parameters.
class ScriptedPolicy : public Policy {
 public:
  ScriptedPolicy(const Catalog* catalog, std::vector<StepTemplate> script, int answer_choice = 0);

  std::size_t param_count() const override { return 0; }
  std::span<double> params() override { return {}; }
  std::span<const double> params() const override { return {}; }

  double log_prob(const PolicyContext& ctx, const StepTemplate& t) const override;
  void grad_log_prob(const PolicyContext&, const StepTemplate&, double,
                     std::span<double>) const override {}
  StepTemplate sample(const PolicyContext& ctx, double temperature, Rng& rng) const override;

  double answer_log_prob(const AnswerSlot& slot, int choice) const override;
  void grad_answer_log_prob(const AnswerSlot&, int, double, std::span<double>) const override {}
  int sample_answer(const AnswerSlot& slot, double temperature, Rng& rng) const override;

 private:
  StepTemplate scripted_step(const PolicyContext& ctx) const;
  const Catalog* catalog_;
  std::vector<StepTemplate> script_;
  int answer_choice_;
};

/// Ground-truth replay policy: invokes the catalog tool matching the
/// question, then concludes with the value extracted from the observation.
/// Optional prelude of directly-answered sub-questions adds length variety.
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(const Catalog* catalog, std::vector<int> prelude_entries = {});

  std::size_t param_count() const override { return 0; }
  std::span<double> params() override { return {}; }
  std::span<const double> params() const override { return {}; }

  double log_prob(const PolicyContext& ctx, const StepTemplate& t) const override;
  void grad_log_prob(const PolicyContext&, const StepTemplate&, double,
                     std::span<double>) const override {}
  StepTemplate sample(const PolicyContext& ctx, double temperature, Rng& rng) const override;

  double answer_log_prob(const AnswerSlot& slot, int choice) const override;
  void grad_answer_log_prob(const AnswerSlot&, int, double, std::span<double>) const override {}
  int sample_answer(const AnswerSlot& slot, double temperature, Rng& rng) const override;

  /// The canonical value string this policy would answer a slot with.
  std::string slot_value(const AnswerSlot& slot) const;

 private:
  StepTemplate planned_step(const PolicyContext& ctx) const;
  const Catalog* catalog_;
  std::vector<int> prelude_;
};

/// Rendering of a chosen answer: "<label>. <text>" for labeled options,
/// the bare text otherwise.
std::string render_answer(const std::vector<QAOption>& choices, int choice);
/// Inverse of render_answer over a choice list; -1 when nothing matches.
int choice_from_answer(const std::vector<QAOption>& choices, const std::string& answer);

std::vector<QAOption> answer_choices_for(const QAItem& qa);

}  // namespace driveagent
