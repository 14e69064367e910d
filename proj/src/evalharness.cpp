#include "driveagent/evalharness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "httplib.h"

#include "driveagent/datagen.hpp"

namespace driveagent::eval {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const Scene& scene_for(const Trace& trace, const std::vector<Scene>& scenes) {
  for (const auto& s : scenes) {
    if (s.id == trace.scene_id) return s;
  }
  throw Error("trace references unknown scene '" + trace.scene_id + "'");
}

const QAItem& qa_for(const Trace& trace, const Scene& scene) {
  const QAItem* qa = scene.find_qa(trace.question_id);
  if (!qa) {
    throw Error("trace references unknown question '" + trace.question_id + "' in scene '" +
                scene.id + "'");
  }
  return *qa;
}

}  // namespace

ToolUseScores ToolUseScores::from_components(double appropriateness, double chain_coherence,
                                             double perception_alignment) {
  ToolUseScores s;
  s.appropriateness = round2(appropriateness);
  s.chain_coherence = round2(chain_coherence);
  s.perception_alignment = round2(perception_alignment);
  s.overall = round2((appropriateness + chain_coherence + perception_alignment) / 3.0);
  return s;
}

Json ToolUseScores::to_json() const {
  return Json{{"appropriateness", appropriateness},
              {"chain_coherence", chain_coherence},
              {"perception_alignment", perception_alignment},
              {"overall", overall}};
}

bool call_params_aligned(const tools::ToolCall& call, const Scene& scene) {
  const auto& occ = scene.occupancy;
  const auto& map = scene.map;
  auto in_occ = [&](double x, double y) { return occ.contains(Position{x, y}); };
  auto in_map = [&](double x, double y) { return map.contains(Position{x, y}); };

  const std::string& name = call.name;
  const Json& p = call.params;

  if (name == "get_object_detections_in_range" || name == "get_future_trajectories_in_range") {
    return in_occ(p[0].get<double>(), p[2].get<double>()) &&
           in_occ(p[1].get<double>(), p[3].get<double>());
  }
  if (name == "get_future_trajectories_for_specific_objects" ||
      name == "get_future_waypoint_of_specific_objects_at_timestep") {
    for (const auto& id : p[0]) {
      if (!scene.find_object(id.get<std::string>())) return false;
    }
    if (name == "get_future_waypoint_of_specific_objects_at_timestep") {
      int t = p[1].get<int>();
      if (t < 0 || t >= occ.timesteps) return false;
    }
    return true;
  }
  if (name == "get_occupancy_at_locations_for_timestep") {
    int t = p[1].get<int>();
    if (t < 0 || t >= occ.timesteps) return false;
    for (const auto& loc : p[0]) {
      if (!in_occ(loc[0].get<double>(), loc[1].get<double>())) return false;
    }
    return true;
  }
  if (name == "check_occupancy_for_planned_trajectory") {
    for (const auto& wp : p[0]) {
      int t = wp[0].get<int>();
      if (t < 0 || t >= occ.timesteps) return false;
      if (!in_occ(wp[1][0].get<double>(), wp[1][1].get<double>())) return false;
    }
    return true;
  }
  if (name == "get_drivable_at_locations" || name == "get_lane_category_at_locations" ||
      name == "get_distance_to_shoulder_at_locations" ||
      name == "get_distance_to_lane_divider_at_locations") {
    for (const auto& loc : p[0]) {
      if (!in_map(loc[0].get<double>(), loc[1].get<double>())) return false;
    }
    return true;
  }
  if (name == "get_open_world_vocabulary_detection" || name == "get_3d_loc_in_cam") {
    std::set<std::string> categories;
    for (const auto& o : scene.objects) categories.insert(lower(o.category));
    if (name == "get_3d_loc_in_cam") return categories.count(lower(p[0].get<std::string>())) > 0;
    for (const auto& w : p[0]) {
      if (!categories.count(lower(w.get<std::string>()))) return false;
    }
    return !p[0].empty();
  }
  if (name == "crop_image_info") {
    return 0 <= p[0].get<int>() && p[0].get<int>() < p[2].get<int>() &&
           p[2].get<int>() <= scene.front_raster.width && 0 <= p[1].get<int>() &&
           p[1].get<int>() < p[3].get<int>() && p[3].get<int>() <= scene.front_raster.height;
  }
  if (name == "resize_image_info") {
    return p[0].get<int>() >= 1 && p[1].get<int>() >= 1;
  }
  // parameterless tools are always grounded in the scene
  return true;
}

ToolUseScores score_tool_use(const std::vector<Trace>& traces, const std::vector<Scene>& scenes,
                             const Catalog& catalog) {
  if (traces.empty()) throw Error("score_tool_use: no traces");

  std::size_t calls = 0;
  std::size_t appropriate = 0;
  std::size_t aligned = 0;
  double coherence_sum = 0.0;

  for (const auto& trace : traces) {
    const Scene& scene = scene_for(trace, scenes);
    coherence_sum += coherence_reward(trace);
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      const auto& step = trace.steps[i];
      if (!step.tool_call) continue;
      ++calls;

      bool referenced = false;
      if (step.observation) {
        for (std::size_t later = i + 1; later < trace.steps.size() && !referenced; ++later) {
          std::string text = trace.steps[later].sub_question;
          if (trace.steps[later].guessed_answer) text += " " + *trace.steps[later].guessed_answer;
          referenced = observation_referenced_by(&*step.tool_call, *step.observation, text);
        }
      }
      int entry = catalog.entry_by_question(step.sub_question);
      bool matches_subq =
          entry >= 0 && catalog.entries()[entry].invocation.name == step.tool_call->name;
      if (referenced && matches_subq) ++appropriate;

      if (call_params_aligned(*step.tool_call, scene)) ++aligned;
    }
  }

  double appropriateness = calls == 0 ? 100.0 : 100.0 * appropriate / calls;
  double alignment = calls == 0 ? 100.0 : 100.0 * aligned / calls;
  double coherence = 100.0 * coherence_sum / traces.size();
  return ToolUseScores::from_components(appropriateness, coherence, alignment);
}

double acc_binary(const std::string& prediction, const std::string& truth) {
  return lower(prediction) == lower(truth) ? 1.0 : 0.0;
}

double acc_distance(double predicted, double truth, double alpha_d) {
  if (!(alpha_d > 0.0)) throw Error("acc_distance: alpha_d must be > 0");
  return 1.0 / (1.0 + alpha_d * std::abs(predicted - truth));
}

double acc_position(double px, double py, double tx, double ty, double alpha_p) {
  if (!(alpha_p > 0.0)) throw Error("acc_position: alpha_p must be > 0");
  return 1.0 / (1.0 + alpha_p * std::hypot(px - tx, py - ty));
}

double acc_bbox(const Box& predicted, const Box& truth) {
  auto well_formed = [](const Box& b) { return b.x0 < b.x1 && b.y0 < b.y1; };
  if (!well_formed(predicted) || !well_formed(truth)) {
    throw Error("acc_bbox: boxes must satisfy min < max per axis");
  }
  double ix = std::min(predicted.x1, truth.x1) - std::max(predicted.x0, truth.x0);
  double iy = std::min(predicted.y1, truth.y1) - std::max(predicted.y0, truth.y0);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  double inter = ix * iy;
  double area_p = (predicted.x1 - predicted.x0) * (predicted.y1 - predicted.y0);
  double area_t = (truth.x1 - truth.x0) * (truth.y1 - truth.y0);
  return inter / (area_p + area_t - inter);
}

Json SpatialReport::to_json() const {
  Json tasks;
  for (const char* task : kSpatialTasks) tasks[task] = task_means.at(task);
  return Json{{"tasks", std::move(tasks)}, {"acc_s", acc_s}};
}

SpatialReport aggregate_spatial(const std::map<std::string, std::vector<double>>& per_task) {
  SpatialReport report;
  double total = 0.0;
  for (const char* task : kSpatialTasks) {
    auto it = per_task.find(task);
    if (it == per_task.end() || it->second.empty()) {
      throw Error(std::string("aggregate_spatial: missing task '") + task + "'");
    }
    double mean = 0.0;
    for (double v : it->second) mean += v;
    mean /= static_cast<double>(it->second.size());
    report.task_means[task] = mean;
    total += mean;
  }
  report.acc_s = total / 8.0;
  return report;
}

// ---- judge ----

const std::vector<std::string>& rubric_metrics() {
  static const std::vector<std::string> metrics = {
      "Faithfulness-Step",
      "Informativeness-Step",
      "Risk Assessment Accuracy",
      "Traffic Rule Adherence",
      "Scene Awareness & Object Understanding",
      "Repetition-Token",
      "Hallucination",
      "Semantic Coverage-Step",
      "Commonsense Reasoning",
      "Missing Step",
      "Relevance",
      "Missing Details"};
  return metrics;
}

const std::string& rubric_prompt() {
  static const std::string prompt = [] {
    std::string p =
        "You are an autonomous driving reasoning evaluator. Assess the alignment, coherence and "
        "quality of the reasoning steps in the response for a safety-critical driving scenario.\n"
        "Score each metric on 1-10 (9-10 excellent, 7-8 good with minor issues, 5-6 partial, "
        "3-4 poor, 1-2 failing):\n";
    int i = 1;
    for (const auto& m : rubric_metrics()) {
      p += std::to_string(i++) + ". " + m + " (1-10)\n";
    }
    p +=
        "Compute the Overall Score as the average of all metric scores.\n"
        "Reply with exactly one JSON object whose keys are the metric names above plus "
        "\"Overall Score\"; no additional text.";
    return p;
  }();
  return prompt;
}

Json ScoreCard::to_json() const {
  Json s;
  for (const auto& [name, value] : scores) s[name] = value;
  return Json{{"scores", std::move(s)}, {"overall", overall}};
}

RuleJudge::RuleJudge(const Catalog* catalog) : catalog_(catalog) {}

std::map<std::string, double> RuleJudge::score(const Trace& trace, const Scene& scene) const {
  const QAItem& qa = qa_for(trace, scene);

  // deterministic signals in [0,1]
  double answer = final_answer_reward(trace.final_answer, qa.ground_truth_answer, qa.options);
  double coherence = coherence_reward(trace);
  double integration = integration_quality_reward(trace);
  double format = format_compliance_reward(trace, tools::default_registry());

  double coverage = format;
  double order = format;
  if (qa.reference_trace) {
    ParseResult ref = trace_from_json(*qa.reference_trace);
    if (ref.ok() && !ref.trace->steps.empty()) {
      double both = step_matching_reward(trace, *ref.trace);
      // split: coverage alone, then the ordering factor it was scaled by
      std::size_t matched = 0;
      std::vector<bool> used(ref.trace->steps.size(), false);
      for (const auto& cand : trace.steps) {
        for (std::size_t r = 0; r < ref.trace->steps.size(); ++r) {
          if (used[r]) continue;
          std::string cand_tool = cand.tool_call ? cand.tool_call->name : "";
          std::string ref_tool = ref.trace->steps[r].tool_call ? ref.trace->steps[r].tool_call->name : "";
          if (cand_tool == ref_tool && cand.sub_question == ref.trace->steps[r].sub_question) {
            used[r] = true;
            ++matched;
            break;
          }
        }
      }
      coverage = static_cast<double>(matched) / ref.trace->steps.size();
      order = coverage > 0.0 ? both / coverage : 1.0;
    }
  }

  AuditReport audit = audit_trace(trace, scene, qa, *catalog_);
  std::size_t obs_total = 0;
  for (const auto& step : trace.steps) obs_total += step.observation ? 1 : 0;
  std::size_t factual_findings = 0;
  for (const auto& f : audit.findings) factual_findings += f.kind == "factual" ? 1 : 0;
  double grounding =
      obs_total + trace.steps.size() == 0
          ? 1.0
          : 1.0 - std::min<double>(1.0, static_cast<double>(factual_findings) /
                                            std::max<std::size_t>(1, obs_total + 1));

  std::size_t aligned = 0;
  std::size_t calls = 0;
  for (const auto& step : trace.steps) {
    if (!step.tool_call) continue;
    ++calls;
    aligned += call_params_aligned(*step.tool_call, scene) ? 1 : 0;
  }
  double alignment = calls == 0 ? 1.0 : static_cast<double>(aligned) / calls;

  std::set<std::pair<std::string, std::string>> seen;
  std::size_t duplicates = 0;
  for (const auto& step : trace.steps) {
    auto key = std::make_pair(step.tool_call ? step.tool_call->name : "", step.sub_question);
    if (!seen.insert(key).second) ++duplicates;
  }
  double repetition = trace.steps.size() <= 1
                          ? 1.0
                          : 1.0 - static_cast<double>(duplicates) / (trace.steps.size() - 1);

  auto scale = [](double signal) { return 1.0 + 9.0 * std::clamp(signal, 0.0, 1.0); };
  return {
      {"Faithfulness-Step", scale(coverage * order)},
      {"Informativeness-Step", scale(coverage)},
      {"Risk Assessment Accuracy", scale(answer)},
      {"Traffic Rule Adherence", scale(alignment)},
      {"Scene Awareness & Object Understanding", scale(grounding)},
      {"Repetition-Token", scale(repetition)},
      {"Hallucination", scale(grounding)},
      {"Semantic Coverage-Step", scale((coverage + integration) / 2.0)},
      {"Commonsense Reasoning", scale(coherence)},
      {"Missing Step", scale(coverage)},
      {"Relevance", scale(integration)},
      {"Missing Details", scale((answer + coverage) / 2.0)},
  };
}

HttpJudge::HttpJudge(std::string url) : url_(std::move(url)) {}

std::map<std::string, double> HttpJudge::score(const Trace& trace, const Scene& scene) const {
  auto split = url_.find("://");
  std::string rest = split == std::string::npos ? url_ : url_.substr(split + 3);
  auto slash = rest.find('/');
  std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : rest.substr(slash);

  Json request = Json{{"prompt", rubric_prompt()},
                      {"scene_id", scene.id},
                      {"trace", trace_to_json(trace)}};

  httplib::Client client(("http://" + host).c_str());
  client.set_read_timeout(30, 0);
  auto response = client.Post(path.c_str(), request.dump(), "application/json");
  if (!response || response->status != 200) {
    throw Error("judge request to " + url_ + " failed");
  }
  Json body = Json::parse(response->body);
  if (!body.is_object()) throw Error("judge response must be a JSON object");

  std::map<std::string, double> scores;
  for (const auto& metric : rubric_metrics()) {
    if (body.contains(metric)) {
      scores[metric] = body[metric].get<double>();
    } else if (metric == "Scene Awareness & Object Understanding" &&
               body.contains("Object Understanding")) {
      // short key used by some scorers for rubric item 5
      scores[metric] = body["Object Understanding"].get<double>();
    }
  }
  return scores;
}

ScoreCard judge_scorecard(const Judge& judge, const Trace& trace, const Scene& scene) {
  std::map<std::string, double> raw = judge.score(trace, scene);
  const auto& metrics = rubric_metrics();
  if (raw.size() != metrics.size()) {
    throw Error("judge returned " + std::to_string(raw.size()) + " metrics, want " +
                std::to_string(metrics.size()));
  }
  ScoreCard card;
  double total = 0.0;
  for (const auto& metric : metrics) {
    auto it = raw.find(metric);
    if (it == raw.end()) throw Error("judge response missing metric '" + metric + "'");
    if (it->second < 1.0 || it->second > 10.0) {
      throw Error("judge score for '" + metric + "' out of range [1,10]");
    }
    card.scores.emplace_back(metric, it->second);
    total += it->second;
  }
  card.overall = round2(total / static_cast<double>(metrics.size()));
  return card;
}

// ---- combined run evaluation ----

namespace {

std::vector<double> numbers_in(const std::string& text) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isdigit(static_cast<unsigned char>(text[i])) ||
        ((text[i] == '-' || text[i] == '+') && i + 1 < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t used = 0;
      double v = std::stod(text.substr(i), &used);
      out.push_back(v);
      i += used;
    } else {
      ++i;
    }
  }
  return out;
}

/// Task key of a spatial question id "spatial.<task>.<n>"; empty otherwise.
std::string spatial_task_of(const std::string& qa_id) {
  if (qa_id.rfind("spatial.", 0) != 0) return "";
  auto rest = qa_id.substr(8);
  auto dot = rest.find('.');
  std::string task = dot == std::string::npos ? rest : rest.substr(0, dot);
  for (const char* t : kSpatialTasks) {
    if (task == t) return task;
  }
  return "";
}

double spatial_accuracy(const std::string& task, const std::string& prediction,
                        const std::string& truth, const SpatialMetricConfig& config) {
  if (task == "lr" || task == "fb") return acc_binary(prediction, truth);
  std::vector<double> p = numbers_in(prediction);
  std::vector<double> t = numbers_in(truth);
  if (task == "ppos") {
    if (p.size() < 2 || t.size() < 2) return 0.0;
    return acc_position(p[0], p[1], t[0], t[1], config.alpha_p);
  }
  if (task == "bbox") {
    if (p.size() < 4 || t.size() < 4) return 0.0;
    Box pb{p[0], p[1], p[2], p[3]};
    Box tb{t[0], t[1], t[2], t[3]};
    if (!(pb.x0 < pb.x1 && pb.y0 < pb.y1)) return 0.0;
    if (!(tb.x0 < tb.x1 && tb.y0 < tb.y1)) return 0.0;
    return acc_bbox(pb, tb);
  }
  // rhd, rd, cvd, cd: scalar distances
  if (p.empty() || t.empty()) return 0.0;
  return acc_distance(p[0], t[0], config.alpha_d);
}

}  // namespace

Json EvalReport::to_json() const {
  Json doc;
  doc["format_version"] = 1;
  doc["num_traces"] = num_traces;
  doc["mcq_accuracy"] = mcq_accuracy;
  doc["tool_use"] = tool_use.to_json();
  doc["spatial"] = spatial ? spatial->to_json() : Json();
  if (!scorecards.empty()) {
    Json cards = Json::array();
    for (const auto& c : scorecards) cards.push_back(c.to_json());
    doc["scorecards"] = std::move(cards);
  }
  return doc;
}

EvalReport evaluate_run(const std::vector<Trace>& traces, const std::vector<Scene>& scenes,
                        const Catalog& catalog, const EvalOptions& options) {
  if (traces.empty()) throw Error("evaluate_run: empty trace corpus");

  EvalReport report;
  report.num_traces = traces.size();

  double answer_sum = 0.0;
  std::map<std::string, std::vector<double>> spatial_acc;
  for (const auto& trace : traces) {
    const Scene& scene = scene_for(trace, scenes);
    const QAItem& qa = qa_for(trace, scene);
    answer_sum += final_answer_reward(trace.final_answer, qa.ground_truth_answer, qa.options);
    std::string task = spatial_task_of(qa.id);
    if (!task.empty()) {
      spatial_acc[task].push_back(
          spatial_accuracy(task, trace.final_answer, qa.ground_truth_answer, options.spatial));
    }
  }
  report.mcq_accuracy = answer_sum / static_cast<double>(traces.size());
  report.tool_use = score_tool_use(traces, scenes, catalog);

  bool all_tasks = std::all_of(std::begin(kSpatialTasks), std::end(kSpatialTasks),
                               [&](const char* t) { return spatial_acc.count(t) > 0; });
  if (all_tasks) report.spatial = aggregate_spatial(spatial_acc);

  if (options.judge) {
    for (const auto& trace : traces) {
      const Scene& scene = scene_for(trace, scenes);
      report.scorecards.push_back(judge_scorecard(*options.judge, trace, scene));
    }
  }
  return report;
}

}  // namespace driveagent::eval
