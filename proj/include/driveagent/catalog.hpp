#pragma once

#include <functional>
#include <string>
#include <vector>

#include "driveagent/scene.hpp"
#include "driveagent/tools.hpp"

namespace driveagent {

/// One entry of the finite sub-question catalog: canonical question text, the
/// tool invocation that answers it, and the rule extracting a canonical value
/// string from that tool's result.
struct SubQuestion {
  std::string id;
  std::string question;
  tools::ToolCall invocation;
  bool numeric = false;  // numeric values audited with distance tolerance
  std::function<std::string(const tools::ToolResult&)> extract;
};

/// Finite sub-question catalog. Defines the discrete template space the
/// policy scores: templates combine an invocation choice (or none), a
/// sub-question, and continue/conclude.
class Catalog {
 public:
  static const Catalog& standard();
  /// Reduced catalog for small experiments and gradient checks.
  Catalog subset(const std::vector<std::string>& ids) const;

  const std::vector<SubQuestion>& entries() const { return entries_; }
  const std::vector<tools::ToolCall>& invocations() const { return invocations_; }

  int entry_index(const std::string& id) const;
  /// Exact question-text lookup; -1 when absent.
  int entry_by_question(const std::string& text) const;
  /// Best token-overlap match against entry question texts (lowercased
  /// token sets, ties to the earlier entry). Always returns a valid index.
  int match_question(const std::string& text) const;

  int invocation_index(const tools::ToolCall& call) const;
  /// Entry whose invocation equals `call`; `preferred` wins when several
  /// entries share the invocation. -1 when no entry matches.
  int entry_for_invocation(const tools::ToolCall& call, int preferred = -1) const;

  /// Answer-slot choices for questions without options.
  static std::vector<QAOption> fallback_answers();

 private:
  explicit Catalog(std::vector<SubQuestion> entries);
  std::vector<SubQuestion> entries_;
  std::vector<tools::ToolCall> invocations_;  // deduped, first-appearance order
};

/// Expected value for a sub-question on a scene: the entry's extraction rule
/// applied to a fresh dispatch of its invocation.
std::string expected_value(const Catalog& catalog, int entry, const Scene& scene);

/// First number embedded in a value string; nullopt when none parses.
std::optional<double> parse_first_number(const std::string& text);

/// Whether a value string supports an option text: numeric values match
/// within `numeric_tolerance`, categorical values must contain every option
/// token (case-insensitive).
bool value_matches_option(const std::string& value, const std::string& option_text, bool numeric,
                          double numeric_tolerance = 0.5);

/// Option best matching a value string; -1 when nothing matches.
int best_option_for_value(const std::string& value, const std::vector<QAOption>& options,
                          bool numeric, double numeric_tolerance = 0.5);

}  // namespace driveagent
