#include "driveagent/reward.hpp"

#include "driveagent/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace driveagent {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string strip_dots(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ':')) s.pop_back();
  return s;
}

/// Reduce an answer to an option label: rightmost token equal to a label,
/// else an option whose text matches the whole normalized answer. Empty
/// string when nothing resolves.
std::string label_of(const std::string& answer, const std::vector<QAOption>& options) {
  std::vector<Token> tokens = tokenize(answer);
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    std::string t = lower(strip_dots(it->text));
    for (const auto& opt : options) {
      if (t == lower(opt.label)) return lower(opt.label);
    }
  }
  std::string norm = lower(answer);
  // trim
  auto first = norm.find_first_not_of(" \t\n\r");
  auto last = norm.find_last_not_of(" \t\n\r");
  norm = first == std::string::npos ? "" : norm.substr(first, last - first + 1);
  for (const auto& opt : options) {
    if (norm == lower(opt.text)) return lower(opt.label);
  }
  return "";
}

std::string normalized(const std::string& s) {
  std::string out = lower(s);
  auto first = out.find_first_not_of(" \t\n\r");
  auto last = out.find_last_not_of(" \t\n\r");
  return first == std::string::npos ? "" : out.substr(first, last - first + 1);
}

bool step_coupling_ok(const ReasoningStep& step) {
  return step.uncertainty_flag ? !step.guessed_answer.has_value()
                               : step.guessed_answer.has_value();
}

std::string step_text(const ReasoningStep& step) {
  std::string text = step.sub_question;
  if (step.guessed_answer) text += " " + *step.guessed_answer;
  return text;
}

}  // namespace

void RewardWeights::validate() const {
  const double vals[] = {answer, step_match, coherence, format, integration};
  double sum = 0.0;
  for (double v : vals) {
    if (v < 0.0) throw Error("reward weights: must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("reward weights: must sum to 1");
}

Json RewardBreakdown::to_json(const RewardWeights& weights) const {
  return Json{{"answer", answer},
              {"step_match", step_match},
              {"coherence", coherence},
              {"format", format},
              {"integration", integration},
              {"total", total},
              {"weights", Json{{"answer", weights.answer},
                               {"step_match", weights.step_match},
                               {"coherence", weights.coherence},
                               {"format", weights.format},
                               {"integration", weights.integration}}}};
}

double final_answer_reward(const std::string& predicted, const std::string& ground_truth,
                           const std::vector<QAOption>& options) {
  if (!options.empty()) {
    std::string p = label_of(predicted, options);
    std::string t = label_of(ground_truth, options);
    if (!p.empty() && !t.empty()) return p == t ? 1.0 : 0.0;
  }
  return normalized(predicted) == normalized(ground_truth) ? 1.0 : 0.0;
}

double step_matching_reward(const Trace& candidate, const Trace& reference) {
  if (reference.steps.empty()) throw Error("step_matching_reward: empty reference");

  auto tool_name = [](const ReasoningStep& s) {
    return s.tool_call ? s.tool_call->name : std::string();
  };

  std::vector<bool> used(reference.steps.size(), false);
  std::vector<int> matched_ref;  // reference indices in candidate order
  for (const auto& cand : candidate.steps) {
    for (std::size_t r = 0; r < reference.steps.size(); ++r) {
      if (used[r]) continue;
      if (tool_name(cand) == tool_name(reference.steps[r]) &&
          cand.sub_question == reference.steps[r].sub_question) {
        used[r] = true;
        matched_ref.push_back(static_cast<int>(r));
        break;
      }
    }
  }

  double coverage = static_cast<double>(matched_ref.size()) / reference.steps.size();
  std::size_t k = matched_ref.size();
  double order = 1.0;
  if (k >= 2) {
    std::size_t inversions = 0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        if (matched_ref[i] > matched_ref[j]) ++inversions;
      }
    }
    order = 1.0 - static_cast<double>(inversions) / (k * (k - 1) / 2);
  }
  return coverage * order;
}

bool observation_referenced_by(const tools::ToolCall* call,
                               const tools::ToolResult& observation, const std::string& text) {
  std::set<std::string> reference_tokens;
  for (const auto& t : tools::result_value_tokens(observation)) {
    reference_tokens.insert(lower(t));
  }
  if (call) {
    // derived values count too: whatever the catalog extracts from this call
    const Catalog& catalog = Catalog::standard();
    for (const auto& entry : catalog.entries()) {
      if (entry.invocation == *call) {
        try {
          for (const auto& t : tokenize(entry.extract(observation))) {
            reference_tokens.insert(lower(t.text));
          }
        } catch (const std::exception&) {
          // extraction rules may reject foreign payload shapes
        }
      }
    }
  }
  if (reference_tokens.empty()) return false;

  std::vector<double> reference_numbers;
  for (const auto& t : reference_tokens) {
    if (auto v = parse_first_number(t)) reference_numbers.push_back(*v);
  }

  for (const auto& token : tokenize(text)) {
    std::string t = lower(token.text);
    if (reference_tokens.count(t)) return true;
    if (auto v = parse_first_number(t)) {
      for (double r : reference_numbers) {
        if (std::abs(*v - r) <= 0.5) return true;
      }
    }
  }
  return false;
}

double coherence_reward(const Trace& trace) {
  if (trace.steps.size() < 2) return 1.0;
  std::size_t valid = 0;
  std::size_t total = trace.steps.size() - 1;
  for (std::size_t t = 0; t + 1 < trace.steps.size(); ++t) {
    const auto& cur = trace.steps[t];
    const auto& next = trace.steps[t + 1];
    bool ok = cur.action_choice != ActionChoice::conclude;
    if (ok && cur.observation) {
      ok = observation_referenced_by(cur.tool_call ? &*cur.tool_call : nullptr,
                                     *cur.observation, step_text(next));
    }
    if (ok) ok = step_coupling_ok(cur);
    if (ok) ++valid;
  }
  return static_cast<double>(valid) / total;
}

double format_compliance_reward(const Trace& trace, const tools::Registry& registry) {
  return validate_format(trace, registry).compliance_score;
}

double integration_quality_reward(const Trace& trace) {
  std::size_t total = 0;
  std::size_t referenced = 0;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    if (!trace.steps[t].observation) continue;
    ++total;
    for (std::size_t later = t + 1; later < trace.steps.size(); ++later) {
      const auto& src = trace.steps[t];
      if (observation_referenced_by(src.tool_call ? &*src.tool_call : nullptr, *src.observation,
                                    step_text(trace.steps[later]))) {
        ++referenced;
        break;
      }
    }
  }
  if (total == 0) return 1.0;
  return static_cast<double>(referenced) / total;
}

RewardBreakdown total_reward(const Trace& trace, const Trace& reference, const QAItem& qa,
                             const RewardWeights& weights, const tools::Registry& registry) {
  weights.validate();
  RewardBreakdown b;
  b.answer = final_answer_reward(trace.final_answer, qa.ground_truth_answer, qa.options);
  b.step_match = step_matching_reward(trace, reference);
  b.coherence = coherence_reward(trace);
  b.format = format_compliance_reward(trace, registry);
  b.integration = integration_quality_reward(trace);
  b.total = weights.answer * b.answer + weights.step_match * b.step_match +
            weights.coherence * b.coherence + weights.format * b.format +
            weights.integration * b.integration;
  return b;
}

}  // namespace driveagent
