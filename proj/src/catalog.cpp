#include "driveagent/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "driveagent/trace.hpp"

namespace driveagent {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::set<std::string> token_set(const std::string& text) {
  std::set<std::string> out;
  for (const auto& t : tokenize(lower(text))) out.insert(t.text);
  return out;
}

std::string extract_yes_no(const tools::ToolResult& r, const char* key) {
  if (!r.is_value() || !r.value.is_object() || !r.value.contains(key) ||
      !r.value[key].is_boolean()) {
    return "unknown";
  }
  return r.value[key].get<bool>() ? "yes" : "no";
}

}  // namespace

Catalog::Catalog(std::vector<SubQuestion> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (invocation_index(e.invocation) < 0) invocations_.push_back(e.invocation);
  }
}

const Catalog& Catalog::standard() {
  static const Catalog catalog = [] {
    using tools::ToolCall;
    using tools::ToolResult;
    std::vector<SubQuestion> entries;

    entries.push_back(
        {"leading_object", "What is the leading object?",
         ToolCall{"get_leading_object_detection", Json::array()}, false,
         [](const ToolResult& r) -> std::string {
           if (r.is_not_found()) return "none";
           if (!r.is_value() || !r.value.is_object() || !r.value.contains("category") ||
               !r.value.contains("id") || !r.value["category"].is_string() ||
               !r.value["id"].is_string()) {
             return "unknown";
           }
           return r.value["category"].get<std::string>() + " " + r.value["id"].get<std::string>();
         }});

    entries.push_back({"leading_distance", "How far ahead is the leading object in meters?",
                       ToolCall{"get_leading_object_detection", Json::array()}, true,
                       [](const ToolResult& r) -> std::string {
                         if (r.is_not_found()) return "none";
                         if (!r.is_value() || !r.value.is_object() ||
                             !r.value.contains("position") ||
                             !r.value["position"].is_object() ||
                             !r.value["position"].contains("y") ||
                             !r.value["position"]["y"].is_number()) {
                           return "unknown";
                         }
                         return fmt_num(r.value["position"]["y"].get<double>());
                       }});

    entries.push_back({"front_objects", "How many objects are in the front zone?",
                       ToolCall{"get_front_object_detections", Json::array()}, true,
                       [](const ToolResult& r) -> std::string {
                         if (r.is_not_found()) return "0";
                         if (!r.is_value() || !r.value.is_array()) return "unknown";
                         return fmt_num(static_cast<double>(r.value.size()));
                       }});

    entries.push_back(
        {"drivable_left", "Is the position four meters to the left of the ego vehicle drivable?",
         ToolCall{"get_drivable_at_locations",
                  Json::array({Json::array({Json::array({-4.0, 0.0})})})},
         false,
         [](const ToolResult& r) -> std::string {
           if (!r.is_value() || !r.value.is_array() || r.value.empty()) return "unknown";
           const Json& v = r.value[0];
           if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
           return "unknown";
         }});

    entries.push_back(
        {"collision_ahead", "Does the planned ego-lane path collide within the prediction horizon?",
         ToolCall{"check_occupancy_for_planned_trajectory",
                  Json::array({Json::array({Json::array({1, Json::array({0.0, 4.0})}),
                                            Json::array({2, Json::array({0.0, 8.0})})})})},
         false,
         [](const ToolResult& r) -> std::string { return extract_yes_no(r, "collision"); }});

    entries.push_back(
        {"lane_at_ego", "What is the lane category at the ego position?",
         ToolCall{"get_lane_category_at_locations",
                  Json::array({Json::array({Json::array({0.0, 0.0})})})},
         false,
         [](const ToolResult& r) -> std::string {
           if (!r.is_value() || !r.value.is_array() || r.value.empty()) return "unknown";
           const Json& v = r.value[0];
           return v.is_string() && v.get<std::string>() != tools::kOutOfScope
                      ? v.get<std::string>()
                      : "unknown";
         }});

    entries.push_back({"crossing_distance",
                       "How far away is the nearest pedestrian crossing in meters?",
                       ToolCall{"get_nearest_pedestrian_crossing", Json::array()}, true,
                       [](const ToolResult& r) -> std::string {
                         if (r.is_not_found()) return "none";
                         if (!r.is_value() || !r.value.is_object() || !r.value.contains("x") ||
                             !r.value.contains("y") || !r.value["x"].is_number() ||
                             !r.value["y"].is_number()) {
                           return "unknown";
                         }
                         double x = r.value["x"].get<double>();
                         double y = r.value["y"].get<double>();
                         return fmt_num(std::hypot(x, y));
                       }});

    entries.push_back({"shoulder_left_distance",
                       "How far is the left road shoulder from the ego position in meters?",
                       ToolCall{"get_current_shoulder", Json::array()}, true,
                       [](const ToolResult& r) -> std::string {
                         if (r.is_not_found()) return "none";
                         if (!r.is_value() || !r.value.is_object() || !r.value.contains("left") ||
                             !r.value["left"].is_number()) {
                           return "unknown";
                         }
                         return fmt_num(r.value["left"].get<double>());
                       }});

    return Catalog(std::move(entries));
  }();
  return catalog;
}

Catalog Catalog::subset(const std::vector<std::string>& ids) const {
  std::vector<SubQuestion> selected;
  for (const auto& id : ids) {
    int i = entry_index(id);
    if (i < 0) throw Error("catalog subset: unknown entry '" + id + "'");
    selected.push_back(entries_[i]);
  }
  if (selected.empty()) throw Error("catalog subset: must keep at least one entry");
  return Catalog(std::move(selected));
}

int Catalog::entry_index(const std::string& id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int Catalog::entry_by_question(const std::string& text) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].question == text) return static_cast<int>(i);
  }
  return -1;
}

int Catalog::match_question(const std::string& text) const {
  int exact = entry_by_question(text);
  if (exact >= 0) return exact;
  std::set<std::string> query = token_set(text);
  int best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    std::set<std::string> own = token_set(entries_[i].question);
    std::size_t shared = 0;
    for (const auto& t : own) shared += query.count(t);
    double score = own.empty() ? 0.0 : static_cast<double>(shared) / own.size();
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

int Catalog::invocation_index(const tools::ToolCall& call) const {
  for (std::size_t i = 0; i < invocations_.size(); ++i) {
    if (invocations_[i] == call) return static_cast<int>(i);
  }
  return -1;
}

int Catalog::entry_for_invocation(const tools::ToolCall& call, int preferred) const {
  if (preferred >= 0 && preferred < static_cast<int>(entries_.size()) &&
      entries_[preferred].invocation == call) {
    return preferred;
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].invocation == call) return static_cast<int>(i);
  }
  return -1;
}

std::vector<QAOption> Catalog::fallback_answers() {
  return {{"yes", "yes"}, {"no", "no"}, {"none", "none"}, {"unknown", "unknown"}};
}

std::string expected_value(const Catalog& catalog, int entry, const Scene& scene) {
  const auto& e = catalog.entries().at(entry);
  return e.extract(tools::default_registry().dispatch(scene, e.invocation));
}

std::optional<double> parse_first_number(const std::string& text) {
  for (const auto& token : tokenize(text)) {
    // strip trailing punctuation that the tokenizer keeps inside runs
    std::string t = token.text;
    while (!t.empty() && (t.back() == '.' || t.back() == '+' || t.back() == '-')) t.pop_back();
    if (t.empty()) continue;
    try {
      std::size_t used = 0;
      double v = std::stod(t, &used);
      if (used == t.size()) return v;
    } catch (...) {
    }
  }
  return std::nullopt;
}

bool value_matches_option(const std::string& value, const std::string& option_text, bool numeric,
                          double numeric_tolerance) {
  if (numeric) {
    auto a = parse_first_number(value);
    auto b = parse_first_number(option_text);
    if (a && b) return std::abs(*a - *b) <= numeric_tolerance;
    // fall through: "none" options pair with non-numeric values
  }
  if (lower(value) == lower(option_text)) return true;
  std::set<std::string> value_tokens = token_set(value);
  std::set<std::string> option_tokens = token_set(option_text);
  if (option_tokens.empty()) return false;
  return std::all_of(option_tokens.begin(), option_tokens.end(),
                     [&](const std::string& t) { return value_tokens.count(t) > 0; });
}

int best_option_for_value(const std::string& value, const std::vector<QAOption>& options,
                          bool numeric, double numeric_tolerance) {
  if (numeric) {
    auto v = parse_first_number(value);
    if (v) {
      int best = -1;
      double best_diff = 0.0;
      for (std::size_t i = 0; i < options.size(); ++i) {
        auto o = parse_first_number(options[i].text);
        if (!o) continue;
        double diff = std::abs(*o - *v);
        if (diff <= numeric_tolerance && (best < 0 || diff < best_diff)) {
          best = static_cast<int>(i);
          best_diff = diff;
        }
      }
      if (best >= 0) return best;
    }
  }
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (value_matches_option(value, options[i].text, false)) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace driveagent
