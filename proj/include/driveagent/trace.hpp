#pragma once

#include <optional>
#include <string>
#include <vector>

#include "driveagent/tools.hpp"
#include "driveagent/util.hpp"

namespace driveagent {

inline constexpr int kDefaultMaxSteps = 8;

enum class ActionChoice { continue_reasoning, conclude };

std::string action_choice_name(ActionChoice ac);

/// One reasoning step: tool choice, sub-question, uncertainty flag, guessed
/// answer and action choice, plus the injected observation when a tool ran.
struct ReasoningStep {
  int index = 1;
  std::optional<tools::ToolCall> tool_call;
  std::string sub_question;
  bool uncertainty_flag = false;
  std::optional<std::string> guessed_answer;
  ActionChoice action_choice = ActionChoice::continue_reasoning;
  // Set when the step cap rewrote a sampled "continue" into "conclude".
  bool forced_conclude = false;
  std::optional<tools::ToolResult> observation;
};

struct Trace {
  std::string scene_id;
  std::string question_id;
  std::vector<ReasoningStep> steps;
  std::string final_answer;
};

struct TraceError {
  int step_index = 0;  // 0 = trace level
  std::string field;
  std::string message;
};

struct ParseResult {
  std::optional<Trace> trace;
  std::vector<TraceError> errors;  // complete list, never just the first
  bool ok() const { return trace.has_value(); }
};

/// Structural invariant violations of an in-memory trace (contiguous indices,
/// nothing after a conclude step, uncertainty/answer coupling, observation
/// implies tool call). Empty when valid.
std::vector<TraceError> validate_structure(const Trace& trace);

/// Parses one serialized trace line. Collects every structural error instead
/// of stopping at the first.
ParseResult parse_trace(const std::string& text, int max_steps = kDefaultMaxSteps);
ParseResult trace_from_json(const Json& doc, int max_steps = kDefaultMaxSteps);

/// Canonical single-line serialization; inverse of parse_trace. Throws Error
/// naming the violated invariant when the trace is structurally invalid.
std::string serialize_trace(const Trace& trace);
Json trace_to_json(const Trace& trace);

/// serialize_trace plus the byte ranges of each observation value, in step
/// order; feeds the observation mask.
struct SerializedTrace {
  std::string text;
  std::vector<std::pair<std::size_t, std::size_t>> observation_ranges;
};
SerializedTrace serialize_trace_with_ranges(const Trace& trace);

// ---- tokenizer ----
// Rule set: a token is a maximal run of [A-Za-z0-9_.+-]; every other
// non-whitespace character is a single-character token; whitespace separates.
struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;
};
std::vector<Token> tokenize(const std::string& text);

/// Per-token mask over the canonical serialization: false exactly on tokens
/// overlapping an observation value, true elsewhere.
std::vector<bool> observation_mask(const Trace& trace);

// ---- format compliance ----

struct ComplianceReport {
  bool parse_ok = true;
  std::vector<TraceError> field_errors;
  double compliance_score = 1.0;
  int checks = 0;
  int violations = 0;
};

/// Scores adherence to the expected structure: two trace-level checks
/// (contiguous indices, nothing after conclude) and four per step
/// (uncertainty/answer coupling, observation implies tool call, tool name
/// known to the registry, params conforming to the schema).
/// compliance_score = 1 - violations / checks.
ComplianceReport validate_format(const Trace& trace, const tools::Registry& registry);

// ---- corpus IO (JSONL, one trace per line) ----

std::vector<Trace> load_corpus(const std::string& path, int max_steps = kDefaultMaxSteps);
void save_corpus(const std::vector<Trace>& traces, const std::string& path);

}  // namespace driveagent
