#include "driveagent/runtime.hpp"

#include <algorithm>

namespace driveagent {

namespace {

/// Most recent observation in the prefix, with its originating call.
void latest_observation(const Trace& prefix, const tools::ToolCall*& call,
                        const tools::ToolResult*& obs) {
  call = nullptr;
  obs = nullptr;
  for (auto it = prefix.steps.rbegin(); it != prefix.steps.rend(); ++it) {
    if (it->observation) {
      obs = &*it->observation;
      call = it->tool_call ? &*it->tool_call : nullptr;
      return;
    }
  }
}

AnswerSlot make_slot(const Scene& scene, const QAItem& qa, const Trace& prefix,
                     const std::string& sub_question) {
  AnswerSlot slot;
  slot.choices = answer_choices_for(qa);
  slot.sub_question = sub_question;
  slot.scene = &scene;
  slot.qa = &qa;
  latest_observation(prefix, slot.source_call, slot.observation);
  return slot;
}

}  // namespace

Trace run_episode(const Policy& policy, const Scene& scene, const QAItem& qa,
                  const Catalog& catalog, const AgentConfig& config, uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Trace trace;
  trace.scene_id = scene.id;
  trace.question_id = qa.id;

  const auto& registry = tools::default_registry();
  for (int t = 1; t <= config.max_steps; ++t) {
    PolicyContext ctx = make_context(scene, qa, trace, catalog);
    StepTemplate tmpl = policy.sample(ctx, config.temperature, rng);

    ReasoningStep step;
    step.index = t;
    step.sub_question = catalog.entries()[tmpl.sub_question].question;
    step.uncertainty_flag = tmpl.uses_tool();
    bool conclude = tmpl.conclude;
    if (t == config.max_steps && !conclude) {
      conclude = true;
      step.forced_conclude = true;
    }
    step.action_choice = conclude ? ActionChoice::conclude : ActionChoice::continue_reasoning;

    if (tmpl.uses_tool()) {
      step.tool_call = catalog.invocations()[tmpl.invocation];
      step.observation = registry.dispatch(scene, *step.tool_call);
    } else {
      AnswerSlot slot = make_slot(scene, qa, trace, step.sub_question);
      int choice = policy.sample_answer(slot, config.temperature, rng);
      step.guessed_answer = render_answer(slot.choices, choice);
    }

    trace.steps.push_back(std::move(step));
    if (conclude) break;
  }

  for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) {
    if (it->guessed_answer) {
      trace.final_answer = *it->guessed_answer;
      break;
    }
  }
  if (trace.final_answer.empty()) {
    // every step invoked a tool: fill the final answer from a terminal slot
    AnswerSlot slot = make_slot(scene, qa, trace,
                                trace.steps.empty() ? "" : trace.steps.back().sub_question);
    int choice = policy.sample_answer(slot, config.temperature, rng);
    trace.final_answer = render_answer(slot.choices, choice);
  }
  return trace;
}

std::vector<Trace> sample_group(const Policy& policy, const Scene& scene, const QAItem& qa,
                                const Catalog& catalog, const AgentConfig& config, int workers) {
  config.validate();
  std::vector<Trace> group(config.group_size);
  parallel_for(group.size(), workers, [&](std::size_t i) {
    group[i] = run_episode(policy, scene, qa, catalog, config, config.seed + i);
  });
  return group;
}

StepTemplate template_of(const ReasoningStep& step, const Catalog& catalog) {
  StepTemplate t;
  if (step.tool_call) {
    t.invocation = catalog.invocation_index(*step.tool_call);
    if (t.invocation < 0) {
      throw Error("step " + std::to_string(step.index) + ": tool call '" + step.tool_call->name +
                  "' is not a catalog invocation");
    }
  }
  t.sub_question = catalog.entry_by_question(step.sub_question);
  if (t.sub_question < 0) {
    throw Error("step " + std::to_string(step.index) + ": sub-question not in catalog: " +
                step.sub_question);
  }
  t.conclude = step.action_choice == ActionChoice::conclude && !step.forced_conclude;
  return t;
}

namespace {

/// Shared walker: visits every sampled decision of a recorded trace.
template <typename TemplateFn, typename SlotFn>
void walk_trace(const Scene& scene, const QAItem& qa, const Catalog& catalog, const Trace& trace,
                TemplateFn&& on_template, SlotFn&& on_slot) {
  Trace prefix;
  prefix.scene_id = trace.scene_id;
  prefix.question_id = trace.question_id;
  std::vector<QAOption> choices = answer_choices_for(qa);

  bool any_guess = false;
  for (const auto& step : trace.steps) {
    PolicyContext ctx = make_context(scene, qa, prefix, catalog);
    on_template(ctx, template_of(step, catalog));
    if (!step.uncertainty_flag) {
      if (!step.guessed_answer) {
        throw Error("step " + std::to_string(step.index) + ": missing guessed answer");
      }
      AnswerSlot slot = make_slot(scene, qa, prefix, step.sub_question);
      int choice = choice_from_answer(slot.choices, *step.guessed_answer);
      if (choice < 0) {
        throw Error("step " + std::to_string(step.index) + ": guessed answer '" +
                    *step.guessed_answer + "' is not in the answer-choice set");
      }
      on_slot(slot, choice);
      any_guess = true;
    }
    prefix.steps.push_back(step);
  }

  if (!any_guess && !trace.final_answer.empty()) {
    AnswerSlot slot = make_slot(scene, qa, prefix,
                                trace.steps.empty() ? "" : trace.steps.back().sub_question);
    int choice = choice_from_answer(slot.choices, trace.final_answer);
    if (choice < 0) {
      throw Error("final answer '" + trace.final_answer + "' is not in the answer-choice set");
    }
    on_slot(slot, choice);
  }
}

}  // namespace

double trace_log_prob(const Policy& policy, const Scene& scene, const QAItem& qa,
                      const Catalog& catalog, const Trace& trace) {
  double lp = 0.0;
  walk_trace(
      scene, qa, catalog, trace,
      [&](const PolicyContext& ctx, const StepTemplate& t) { lp += policy.log_prob(ctx, t); },
      [&](const AnswerSlot& slot, int choice) { lp += policy.answer_log_prob(slot, choice); });
  return lp;
}

void trace_log_prob_grad(const Policy& policy, const Scene& scene, const QAItem& qa,
                         const Catalog& catalog, const Trace& trace, double coeff,
                         std::span<double> grad) {
  walk_trace(
      scene, qa, catalog, trace,
      [&](const PolicyContext& ctx, const StepTemplate& t) {
        policy.grad_log_prob(ctx, t, coeff, grad);
      },
      [&](const AnswerSlot& slot, int choice) {
        policy.grad_answer_log_prob(slot, choice, coeff, grad);
      });
}

}  // namespace driveagent
