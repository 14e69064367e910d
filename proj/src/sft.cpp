#include "driveagent/sft.hpp"

#include <cmath>

namespace driveagent {

std::vector<DatasetItem> resolve_items(const std::vector<Trace>& traces,
                                       const std::vector<Scene>& scenes) {
  std::vector<DatasetItem> items;
  items.reserve(traces.size());
  for (const auto& trace : traces) {
    const Scene* scene = nullptr;
    for (const auto& s : scenes) {
      if (s.id == trace.scene_id) {
        scene = &s;
        break;
      }
    }
    if (!scene) throw Error("corpus trace references unknown scene '" + trace.scene_id + "'");
    const QAItem* qa = scene->find_qa(trace.question_id);
    if (!qa) {
      throw Error("corpus trace references unknown question '" + trace.question_id +
                  "' in scene '" + trace.scene_id + "'");
    }
    items.push_back({scene, qa, trace});
  }
  return items;
}

namespace {

/// Visits the units of one item for the given phase: every step template,
/// and (phase 2) one answer slot per observation targeting the next guessed
/// answer after it, falling back to the final answer.
template <typename TemplateFn, typename SlotFn>
void walk_units(const DatasetItem& item, const Catalog& catalog, int phase,
                TemplateFn&& on_template, SlotFn&& on_slot) {
  const Trace& trace = item.trace;
  Trace prefix;
  prefix.scene_id = trace.scene_id;
  prefix.question_id = trace.question_id;
  std::vector<QAOption> choices = answer_choices_for(*item.qa);

  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& step = trace.steps[i];
    PolicyContext ctx = make_context(*item.scene, *item.qa, prefix, catalog);
    on_template(ctx, template_of(step, catalog));

    if (phase == 2 && step.observation) {
      std::string target;
      std::string slot_subq = step.sub_question;
      bool found = false;
      for (std::size_t j = i + 1; j < trace.steps.size(); ++j) {
        if (trace.steps[j].guessed_answer) {
          target = *trace.steps[j].guessed_answer;
          slot_subq = trace.steps[j].sub_question;
          found = true;
          break;
        }
      }
      if (!found) target = trace.final_answer;
      AnswerSlot slot;
      slot.choices = choices;
      slot.sub_question = slot_subq;
      slot.source_call = step.tool_call ? &*step.tool_call : nullptr;
      slot.observation = &*step.observation;
      slot.scene = item.scene;
      slot.qa = item.qa;
      int choice = choice_from_answer(choices, target);
      if (choice < 0) {
        throw Error("trace " + trace.scene_id + "/" + trace.question_id +
                    ": observation-grounded answer '" + target +
                    "' is not in the answer-choice set");
      }
      on_slot(slot, choice);
    }
    prefix.steps.push_back(step);
  }
}

LossReport loss_impl(const Policy& policy, const std::vector<DatasetItem>& items,
                     const Catalog& catalog, int phase, std::span<double> grad) {
  if (items.empty()) throw Error("sft loss: empty dataset");
  LossReport report;
  report.item_count = items.size();

  // First pass: totals (grad needs 1/unit_count, known only after counting).
  double total = 0.0;
  std::size_t units = 0;
  for (const auto& item : items) {
    double item_nll = 0.0;
    walk_units(
        item, catalog, phase,
        [&](const PolicyContext& ctx, const StepTemplate& t) {
          item_nll -= policy.log_prob(ctx, t);
          ++units;
        },
        [&](const AnswerSlot& slot, int choice) {
          item_nll -= policy.answer_log_prob(slot, choice);
          ++units;
        });
    report.per_item.push_back(item_nll);
    total += item_nll;
  }
  if (units == 0) throw Error("sft loss: dataset has no training units");
  report.unit_count = units;
  report.mean_nll = total / static_cast<double>(units);

  if (!grad.empty()) {
    double coeff = -1.0 / static_cast<double>(units);  // d(mean NLL)/d(theta)
    for (const auto& item : items) {
      walk_units(
          item, catalog, phase,
          [&](const PolicyContext& ctx, const StepTemplate& t) {
            policy.grad_log_prob(ctx, t, coeff, grad);
          },
          [&](const AnswerSlot& slot, int choice) {
            policy.grad_answer_log_prob(slot, choice, coeff, grad);
          });
    }
  }
  return report;
}

}  // namespace

LossReport sft_loss_phase1(const Policy& policy, const std::vector<DatasetItem>& items,
                           const Catalog& catalog) {
  return loss_impl(policy, items, catalog, 1, {});
}

LossReport sft_loss_phase2(const Policy& policy, const std::vector<DatasetItem>& items,
                           const Catalog& catalog) {
  return loss_impl(policy, items, catalog, 2, {});
}

LossReport sft_loss_grad(const Policy& policy, const std::vector<DatasetItem>& items,
                         const Catalog& catalog, int phase, std::span<double> grad) {
  return loss_impl(policy, items, catalog, phase, grad);
}

SftResult train_sft(LinearPolicy& policy, const std::vector<DatasetItem>& items,
                    const SftConfig& config) {
  config.validate();
  if (items.empty()) throw Error("train_sft: empty dataset");
  const Catalog& catalog = policy.catalog();

  SftResult result;
  result.loss_curve.push_back(loss_impl(policy, items, catalog, config.phase, {}).mean_nll);

  std::vector<double> grad(policy.param_count());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t begin = 0; begin < items.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(items.size(), begin + config.batch_size);
      std::vector<DatasetItem> batch(items.begin() + begin, items.begin() + end);
      std::fill(grad.begin(), grad.end(), 0.0);
      loss_impl(policy, batch, catalog, config.phase, grad);
      auto params = policy.params();
      for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= config.learning_rate * grad[i];
      }
    }
    double loss = loss_impl(policy, items, catalog, config.phase, {}).mean_nll;
    if (!std::isfinite(loss)) {
      throw Error("train_sft: loss diverged to " + std::to_string(loss) + " at epoch " +
                  std::to_string(epoch + 1));
    }
    result.loss_curve.push_back(loss);
  }
  return result;
}

}  // namespace driveagent
