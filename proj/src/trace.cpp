#include "driveagent/trace.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace driveagent {

std::string action_choice_name(ActionChoice ac) {
  return ac == ActionChoice::conclude ? "conclude" : "continue";
}

std::vector<TraceError> validate_structure(const Trace& trace) {
  std::vector<TraceError> errors;
  bool concluded = false;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& step = trace.steps[i];
    int want = static_cast<int>(i) + 1;
    if (step.index != want) {
      errors.push_back({want, "index",
                        "expected index " + std::to_string(want) + ", got " +
                            std::to_string(step.index)});
    }
    if (concluded) {
      errors.push_back({want, "action_choice", "step after conclude"});
    }
    if (step.uncertainty_flag && step.guessed_answer) {
      errors.push_back({want, "guessed_answer",
                        "guessed answer must be blank when uncertainty flag is set"});
    }
    if (!step.uncertainty_flag && !step.guessed_answer) {
      errors.push_back({want, "guessed_answer",
                        "guessed answer required when uncertainty flag is not set"});
    }
    if (step.observation && !step.tool_call) {
      errors.push_back({want, "observation", "observation without tool call"});
    }
    if (step.action_choice == ActionChoice::conclude) concluded = true;
  }
  return errors;
}

namespace {

void step_from_json(const Json& s, int pos, std::vector<ReasoningStep>& steps,
                    std::vector<TraceError>& errors) {
  ReasoningStep step;
  auto bad = [&](const std::string& field, const std::string& msg) {
    errors.push_back({pos, field, msg});
  };

  if (!s.is_object()) {
    bad("", "expected object");
    return;
  }

  if (!s.contains("index") || !s["index"].is_number_integer()) {
    bad("index", "missing");
  } else {
    step.index = s["index"].get<int>();
  }

  if (!s.contains("tool_call")) {
    bad("tool_call", "missing");
  } else if (!s["tool_call"].is_null()) {
    try {
      step.tool_call = tools::tool_call_from_json(s["tool_call"]);
    } catch (const Error& e) {
      bad("tool_call", e.what());
    }
  }

  if (!s.contains("sub_question") || !s["sub_question"].is_string()) {
    bad("sub_question", "missing");
  } else {
    step.sub_question = s["sub_question"].get<std::string>();
  }

  if (!s.contains("uncertainty_flag") || !s["uncertainty_flag"].is_boolean()) {
    bad("uncertainty_flag", "missing");
  } else {
    step.uncertainty_flag = s["uncertainty_flag"].get<bool>();
  }

  if (!s.contains("guessed_answer")) {
    bad("guessed_answer", "missing");
  } else if (!s["guessed_answer"].is_null()) {
    if (!s["guessed_answer"].is_string()) {
      bad("guessed_answer", "expected string or null");
    } else {
      step.guessed_answer = s["guessed_answer"].get<std::string>();
    }
  }

  if (!s.contains("action_choice") || !s["action_choice"].is_string()) {
    bad("action_choice", "missing");
  } else {
    std::string ac = s["action_choice"].get<std::string>();
    if (ac == "continue") {
      step.action_choice = ActionChoice::continue_reasoning;
    } else if (ac == "conclude") {
      step.action_choice = ActionChoice::conclude;
    } else {
      bad("action_choice", "expected \"continue\" or \"conclude\", got \"" + ac + "\"");
    }
  }

  if (s.contains("forced")) {
    if (!s["forced"].is_boolean()) {
      bad("forced", "expected boolean");
    } else {
      step.forced_conclude = s["forced"].get<bool>();
    }
  }

  if (!s.contains("observation")) {
    bad("observation", "missing");
  } else if (!s["observation"].is_null()) {
    try {
      step.observation = tools::tool_result_from_json(s["observation"]);
    } catch (const Error& e) {
      bad("observation", e.what());
    }
  }

  steps.push_back(std::move(step));
}

}  // namespace

ParseResult trace_from_json(const Json& doc, int max_steps) {
  ParseResult result;
  auto& errors = result.errors;

  if (!doc.is_object()) {
    errors.push_back({0, "", "expected a JSON object"});
    return result;
  }
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer() ||
      doc["format_version"].get<int>() != 1) {
    errors.push_back({0, "format_version", "missing or unsupported"});
  }

  Trace trace;
  if (!doc.contains("scene_id") || !doc["scene_id"].is_string()) {
    errors.push_back({0, "scene_id", "missing"});
  } else {
    trace.scene_id = doc["scene_id"].get<std::string>();
  }
  if (!doc.contains("question_id") || !doc["question_id"].is_string()) {
    errors.push_back({0, "question_id", "missing"});
  } else {
    trace.question_id = doc["question_id"].get<std::string>();
  }
  if (!doc.contains("steps") || !doc["steps"].is_array()) {
    errors.push_back({0, "steps", "missing"});
  } else {
    const Json& steps = doc["steps"];
    for (std::size_t i = 0; i < steps.size(); ++i) {
      step_from_json(steps[i], static_cast<int>(i) + 1, trace.steps, errors);
    }
    if (static_cast<int>(steps.size()) > max_steps) {
      errors.push_back({0, "steps",
                        "trace has " + std::to_string(steps.size()) + " steps, max is " +
                            std::to_string(max_steps)});
    }
  }
  if (!doc.contains("final_answer") || !doc["final_answer"].is_string()) {
    errors.push_back({0, "final_answer", "missing"});
  } else {
    trace.final_answer = doc["final_answer"].get<std::string>();
  }

  if (errors.empty()) {
    auto structural = validate_structure(trace);
    errors.insert(errors.end(), structural.begin(), structural.end());
  }
  if (errors.empty()) result.trace = std::move(trace);
  return result;
}

ParseResult parse_trace(const std::string& text, int max_steps) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    ParseResult result;
    result.errors.push_back({0, "", std::string("JSON parse error: ") + e.what()});
    return result;
  }
  return trace_from_json(doc, max_steps);
}

Json trace_to_json(const Trace& trace) {
  Json steps = Json::array();
  for (const auto& step : trace.steps) {
    Json s;
    s["index"] = step.index;
    s["tool_call"] = step.tool_call ? tools::tool_call_to_json(*step.tool_call) : Json();
    s["sub_question"] = step.sub_question;
    s["uncertainty_flag"] = step.uncertainty_flag;
    s["guessed_answer"] = step.guessed_answer ? Json(*step.guessed_answer) : Json();
    s["action_choice"] = action_choice_name(step.action_choice);
    if (step.forced_conclude) s["forced"] = true;
    s["observation"] = step.observation ? tools::tool_result_to_json(*step.observation) : Json();
    steps.push_back(std::move(s));
  }
  return Json{{"format_version", 1},
              {"scene_id", trace.scene_id},
              {"question_id", trace.question_id},
              {"steps", std::move(steps)},
              {"final_answer", trace.final_answer}};
}

SerializedTrace serialize_trace_with_ranges(const Trace& trace) {
  auto structural = validate_structure(trace);
  if (!structural.empty()) {
    const auto& e = structural.front();
    throw Error("serialize_trace: step " + std::to_string(e.step_index) + " " + e.field + ": " +
                e.message);
  }

  SerializedTrace out;
  std::string& text = out.text;
  auto dump = [](const Json& v) { return v.dump(); };

  text += "{\"format_version\":1,\"scene_id\":";
  text += dump(trace.scene_id);
  text += ",\"question_id\":";
  text += dump(trace.question_id);
  text += ",\"steps\":[";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& step = trace.steps[i];
    if (i > 0) text += ",";
    text += "{\"index\":" + std::to_string(step.index);
    text += ",\"tool_call\":";
    text += step.tool_call ? dump(tools::tool_call_to_json(*step.tool_call)) : "null";
    text += ",\"sub_question\":";
    text += dump(step.sub_question);
    text += ",\"uncertainty_flag\":";
    text += step.uncertainty_flag ? "true" : "false";
    text += ",\"guessed_answer\":";
    text += step.guessed_answer ? dump(*step.guessed_answer) : "null";
    text += ",\"action_choice\":\"" + action_choice_name(step.action_choice) + "\"";
    if (step.forced_conclude) text += ",\"forced\":true";
    text += ",\"observation\":";
    if (step.observation) {
      std::size_t begin = text.size();
      text += dump(tools::tool_result_to_json(*step.observation));
      out.observation_ranges.emplace_back(begin, text.size());
    } else {
      text += "null";
    }
    text += "}";
  }
  text += "],\"final_answer\":";
  text += dump(trace.final_answer);
  text += "}";
  return out;
}

std::string serialize_trace(const Trace& trace) { return serialize_trace_with_ranges(trace).text; }

std::vector<Token> tokenize(const std::string& text) {
  auto is_word_char = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '.' || c == '+' || c == '-';
  };
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      std::size_t begin = i;
      while (i < text.size() && is_word_char(text[i])) ++i;
      tokens.push_back({begin, i, text.substr(begin, i - begin)});
    } else {
      tokens.push_back({i, i + 1, std::string(1, c)});
      ++i;
    }
  }
  return tokens;
}

std::vector<bool> observation_mask(const Trace& trace) {
  SerializedTrace serialized = serialize_trace_with_ranges(trace);
  std::vector<Token> tokens = tokenize(serialized.text);
  std::vector<bool> mask(tokens.size(), true);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (const auto& [begin, end] : serialized.observation_ranges) {
      if (tokens[i].begin < end && tokens[i].end > begin) {
        mask[i] = false;
        break;
      }
    }
  }
  return mask;
}

ComplianceReport validate_format(const Trace& trace, const tools::Registry& registry) {
  ComplianceReport report;
  auto check = [&](bool ok, int step_index, const std::string& field, const std::string& msg) {
    ++report.checks;
    if (!ok) {
      ++report.violations;
      report.field_errors.push_back({step_index, field, msg});
    }
  };

  bool indices_ok = true;
  bool conclude_ok = true;
  bool concluded = false;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    if (trace.steps[i].index != static_cast<int>(i) + 1) indices_ok = false;
    if (concluded) conclude_ok = false;
    if (trace.steps[i].action_choice == ActionChoice::conclude) concluded = true;
  }
  check(indices_ok, 0, "index", "step indices must be contiguous from 1");
  check(conclude_ok, 0, "action_choice", "step after conclude");

  for (const auto& step : trace.steps) {
    bool coupling = step.uncertainty_flag ? !step.guessed_answer : step.guessed_answer.has_value();
    check(coupling, step.index, "guessed_answer",
          step.uncertainty_flag ? "guessed answer must be blank when uncertainty flag is set"
                                : "guessed answer required when uncertainty flag is not set");
    check(!step.observation || step.tool_call.has_value(), step.index, "observation",
          "observation without tool call");

    bool name_known = true;
    if (step.tool_call) name_known = registry.has(step.tool_call->name);
    check(name_known, step.index, "tool_call",
          step.tool_call ? "unknown tool '" + step.tool_call->name + "'" : "");

    bool params_ok = true;
    std::string params_msg;
    if (step.tool_call && name_known) {
      if (auto problem = registry.check_params(*step.tool_call)) {
        params_ok = false;
        params_msg = *problem;
      }
    }
    check(params_ok, step.index, "params", params_msg);
  }

  report.compliance_score =
      report.checks == 0 ? 1.0
                         : 1.0 - static_cast<double>(report.violations) / report.checks;
  return report;
}

std::vector<Trace> load_corpus(const std::string& path, int max_steps) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus: " + path);
  std::vector<Trace> traces;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ParseResult parsed = parse_trace(line, max_steps);
    if (!parsed.ok()) {
      std::string msg = path + ":" + std::to_string(lineno) + ": invalid trace:";
      for (const auto& e : parsed.errors) {
        msg += "\n  step " + std::to_string(e.step_index) + " " + e.field + ": " + e.message;
      }
      throw Error(msg);
    }
    traces.push_back(std::move(*parsed.trace));
  }
  return traces;
}

void save_corpus(const std::vector<Trace>& traces, const std::string& path) {
  std::ostringstream out;
  for (const auto& t : traces) out << serialize_trace(t) << "\n";
  write_file(path, out.str());
}

}  // namespace driveagent
