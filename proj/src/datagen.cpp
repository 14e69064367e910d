#include "driveagent/datagen.hpp"

#include <algorithm>

#include "httplib.h"

namespace driveagent {

OracleGenerator::OracleGenerator(const Catalog* catalog, int max_steps)
    : catalog_(catalog), max_steps_(max_steps) {}

std::vector<Trace> OracleGenerator::propose(const Scene& scene, const QAItem& qa, int n,
                                            uint64_t seed) const {
  if (n < 1) throw Error("propose_traces: n must be >= 1");
  int main_entry = catalog_->match_question(qa.question);
  std::vector<Trace> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    // sample k prepends k direct-answer steps on the main sub-question,
    // bounded so the tool call and conclusion always fit
    int prelude_len = std::min(k, max_steps_ - 2);
    OraclePolicy policy(catalog_, std::vector<int>(std::max(prelude_len, 0), main_entry));
    AgentConfig config;
    config.max_steps = max_steps_;
    config.temperature = 1.0;
    out.push_back(run_episode(policy, scene, qa, *catalog_, config, seed + k));
  }
  return out;
}

FaultInjectingGenerator::FaultInjectingGenerator(const Generator* inner, double fault_rate)
    : inner_(inner), fault_rate_(fault_rate) {
  if (fault_rate < 0.0 || fault_rate > 1.0) {
    throw Error("fault rate must be in [0,1]");
  }
}

namespace {

bool corrupt_first_number(Json& v) {
  if (v.is_number()) {
    v = v.get<double>() + 1.0;
    return true;
  }
  if (v.is_array() || v.is_object()) {
    for (auto& e : v) {
      if (corrupt_first_number(e)) return true;
    }
  }
  return false;
}

bool corrupt_first_string(Json& v) {
  if (v.is_string()) {
    v = v.get<std::string>() + "x";
    return true;
  }
  if (v.is_array() || v.is_object()) {
    for (auto& e : v) {
      if (corrupt_first_string(e)) return true;
    }
  }
  return false;
}

bool corrupt_first_bool(Json& v) {
  if (v.is_boolean()) {
    v = !v.get<bool>();
    return true;
  }
  if (v.is_array() || v.is_object()) {
    for (auto& e : v) {
      if (corrupt_first_bool(e)) return true;
    }
  }
  return false;
}

/// Mutates the first observation so it can no longer equal a re-dispatch.
bool corrupt_observation(Trace& trace) {
  for (auto& step : trace.steps) {
    if (!step.observation) continue;
    auto& obs = *step.observation;
    if (obs.is_value()) {
      if (corrupt_first_number(obs.value) || corrupt_first_string(obs.value) ||
          corrupt_first_bool(obs.value)) {
        return true;
      }
      *step.observation = tools::ToolResult::not_found();
      return true;
    }
    *step.observation = tools::ToolResult::ok(Json{{"corrupted", true}});
    return true;
  }
  return false;
}

}  // namespace

std::vector<Trace> FaultInjectingGenerator::propose(const Scene& scene, const QAItem& qa, int n,
                                                    uint64_t seed) const {
  std::vector<Trace> traces = inner_->propose(scene, qa, n, seed);
  Rng rng(seed ^ 0x5eedfau);
  for (auto& trace : traces) {
    if (rng.uniform() < fault_rate_ && corrupt_observation(trace)) ++faults_;
  }
  return traces;
}

AuditReport audit_trace(const Trace& trace, const Scene& scene, const QAItem& qa,
                        const Catalog& catalog) {
  AuditReport report;
  const auto& registry = tools::default_registry();

  // consistency: structural invariants
  for (const auto& e : validate_structure(trace)) {
    report.consistency_ok = false;
    report.findings.push_back({e.step_index, "consistency", e.field + ": " + e.message});
  }

  // consistency: final answer agrees with the last guessed answer and options
  const std::string* last_guess = nullptr;
  for (const auto& step : trace.steps) {
    if (step.guessed_answer) last_guess = &*step.guessed_answer;
  }
  if (last_guess && *last_guess != trace.final_answer) {
    report.consistency_ok = false;
    report.findings.push_back(
        {0, "consistency", "final answer differs from the last guessed answer"});
  }
  if (!qa.options.empty() && choice_from_answer(qa.options, trace.final_answer) < 0) {
    report.consistency_ok = false;
    report.findings.push_back({0, "consistency", "final answer is not among the options"});
  }

  // factual: observations must replay, guessed answers must match the scene
  for (const auto& step : trace.steps) {
    if (step.observation) {
      tools::ToolResult replay = registry.dispatch(scene, *step.tool_call);
      if (!(replay == *step.observation)) {
        report.factual_ok = false;
        report.findings.push_back({step.index, "factual",
                                   "observation mismatch for '" + step.tool_call->name + "'"});
      }
    }
    if (step.guessed_answer) {
      int entry = catalog.entry_by_question(step.sub_question);
      if (entry < 0) continue;  // no ground-truth rule for foreign sub-questions
      bool numeric = catalog.entries()[entry].numeric;
      std::string expected = expected_value(catalog, entry, scene);
      std::vector<QAOption> choices = answer_choices_for(qa);
      int choice = choice_from_answer(choices, *step.guessed_answer);
      bool ok = choice >= 0 ? value_matches_option(expected, choices[choice].text, numeric)
                            : value_matches_option(expected, *step.guessed_answer, numeric);
      if (!ok) {
        report.factual_ok = false;
        report.findings.push_back({step.index, "factual",
                                   "guessed answer '" + *step.guessed_answer +
                                       "' contradicts the scene (expected '" + expected + "')"});
      }
    }
  }
  return report;
}

Json CorpusStats::to_json() const {
  return Json{{"proposed", proposed},
              {"kept", kept},
              {"pruned_factual", pruned_factual},
              {"pruned_consistency", pruned_consistency}};
}

CorpusStats build_corpus(const Generator& generator, const std::vector<Scene>& scenes, int n,
                         uint64_t seed, const std::string& out_path, const Catalog& catalog,
                         int workers) {
  if (scenes.empty()) throw Error("build_corpus: no scenes");
  if (n < 1) throw Error("build_corpus: n must be >= 1");

  struct Pending {
    const Scene* scene;
    const QAItem* qa;
    Trace trace;
    AuditReport report;
  };
  std::vector<Pending> pending;
  for (const auto& scene : scenes) {
    for (const auto& qa : scene.qa_items) {
      uint64_t qa_seed = seed ^ fnv1a(scene.id + "/" + qa.id);
      std::vector<Trace> proposed = generator.propose(scene, qa, n, qa_seed);
      if (static_cast<int>(proposed.size()) != n) {
        throw Error("generator returned " + std::to_string(proposed.size()) + " traces, want " +
                    std::to_string(n));
      }
      for (auto& trace : proposed) {
        pending.push_back({&scene, &qa, std::move(trace), {}});
      }
    }
  }

  parallel_for(pending.size(), workers, [&](std::size_t i) {
    pending[i].report = audit_trace(pending[i].trace, *pending[i].scene, *pending[i].qa, catalog);
  });

  CorpusStats stats;
  stats.proposed = pending.size();
  std::vector<Trace> kept;
  for (auto& p : pending) {
    if (p.report.keep()) {
      kept.push_back(std::move(p.trace));
      ++stats.kept;
    } else if (!p.report.factual_ok) {
      ++stats.pruned_factual;
    } else {
      ++stats.pruned_consistency;
    }
  }
  save_corpus(kept, out_path);
  return stats;
}

HttpGenerator::HttpGenerator(std::string url) : url_(std::move(url)) {}

std::vector<Trace> HttpGenerator::propose(const Scene& scene, const QAItem& qa, int n,
                                          uint64_t seed) const {
  auto split = url_.find("://");
  std::string rest = split == std::string::npos ? url_ : url_.substr(split + 3);
  auto slash = rest.find('/');
  std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : rest.substr(slash);

  Json options = Json::array();
  for (const auto& o : qa.options) options.push_back(Json{{"label", o.label}, {"text", o.text}});
  Json request = Json{{"scene_id", scene.id},
                      {"question_id", qa.id},
                      {"question", qa.question},
                      {"options", std::move(options)},
                      {"n", n},
                      {"seed", seed}};

  httplib::Client client(("http://" + host).c_str());
  client.set_read_timeout(30, 0);
  auto response = client.Post(path.c_str(), request.dump(), "application/json");
  if (!response || response->status != 200) {
    throw Error("external generator request to " + url_ + " failed");
  }
  Json body = Json::parse(response->body);
  if (!body.is_object() || !body.contains("traces") || !body["traces"].is_array()) {
    throw Error("external generator: expected {\"traces\": [...]}");
  }
  std::vector<Trace> out;
  for (const auto& doc : body["traces"]) {
    ParseResult parsed = trace_from_json(doc);
    if (!parsed.ok()) throw Error("external generator returned an invalid trace");
    out.push_back(std::move(*parsed.trace));
  }
  if (static_cast<int>(out.size()) != n) {
    throw Error("external generator returned " + std::to_string(out.size()) + " traces, want " +
                std::to_string(n));
  }
  return out;
}

}  // namespace driveagent
