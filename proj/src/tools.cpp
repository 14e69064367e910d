#include "driveagent/tools.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace driveagent::tools {

namespace {

Json position_to_json(const Position& p) { return Json{{"x", p.x}, {"y", p.y}}; }

/// Ego lane bounds derived from the scene's divider lines: the nearest
/// divider at or left of x=0 and at or right of x=0. Scenes without a
/// straddling divider pair fall back to [-2, 2].
std::pair<double, double> ego_lane_bounds(const Scene& scene) {
  std::optional<double> left, right;
  for (double d : scene.map.divider_lines) {
    if (d <= 0.0 && (!left || d > *left)) left = d;
    if (d >= 0.0 && (!right || d < *right)) right = d;
  }
  if (left && right && *left < *right) return {*left, *right};
  return {-2.0, 2.0};
}

const SceneObject* leading_object(const Scene& scene) {
  auto [lane_lo, lane_hi] = ego_lane_bounds(scene);
  const SceneObject* best = nullptr;
  for (const auto& o : scene.objects) {
    if (o.position.x < lane_lo || o.position.x > lane_hi) continue;
    if (!(o.position.y > 0.0)) continue;
    if (!best || o.position.y < best->position.y ||
        (o.position.y == best->position.y && o.id < best->id)) {
      best = &o;
    }
  }
  return best;
}

ToolResult objects_result(std::vector<SceneObject> objects) {
  if (objects.empty()) return ToolResult::not_found();
  Json out = Json::array();
  for (const auto& o : objects) out.push_back(scene_object_to_json(o));
  return ToolResult::ok(std::move(out));
}

std::vector<const Trajectory*> trajectories_sorted(const Scene& scene) {
  std::vector<const Trajectory*> out;
  for (const auto& t : scene.trajectories) out.push_back(&t);
  std::sort(out.begin(), out.end(),
            [](const Trajectory* a, const Trajectory* b) { return a->object_id < b->object_id; });
  return out;
}

ToolResult trajectories_result(const std::vector<const Trajectory*>& trajs) {
  if (trajs.empty()) return ToolResult::not_found();
  Json out = Json::array();
  for (const auto* t : trajs) out.push_back(trajectory_to_json(*t));
  return ToolResult::ok(std::move(out));
}

Json pair_to_json(double left, double right) {
  return Json{{"left", left}, {"right", right}};
}

}  // namespace

Json scene_object_to_json(const SceneObject& o) {
  return Json{{"id", o.id},
              {"category", o.category},
              {"position", position_to_json(o.position)},
              {"size", Json{{"width", o.width}, {"length", o.length}}}};
}

Json trajectory_to_json(const Trajectory& t) {
  Json wps = Json::array();
  for (const auto& wp : t.waypoints) {
    wps.push_back(Json{{"timestep", wp.timestep}, {"position", position_to_json(wp.position)}});
  }
  return Json{{"object_id", t.object_id}, {"waypoints", std::move(wps)}};
}

Json raster_to_json(const Raster& r) {
  static const char* digits = "0123456789abcdef";
  std::string hex;
  hex.reserve(r.pixels.size() * 2);
  for (uint8_t b : r.pixels) {
    hex.push_back(digits[b >> 4]);
    hex.push_back(digits[b & 0xf]);
  }
  return Json{{"width", r.width}, {"height", r.height}, {"pixels", hex}};
}

ToolResult get_leading_object_detection(const Scene& scene) {
  const SceneObject* lead = leading_object(scene);
  if (!lead) return ToolResult::not_found();
  return ToolResult::ok(scene_object_to_json(*lead));
}

ToolResult get_surrounding_object_detections(const Scene& scene) {
  return objects_result(objects_in_rect(scene, -10.0, 10.0, -10.0, 10.0));
}

ToolResult get_front_object_detections(const Scene& scene) {
  return objects_result(objects_in_rect(scene, -5.0, 5.0, 0.0, 20.0));
}

ToolResult get_object_detections_in_range(const Scene& scene, double x_start, double x_end,
                                          double y_start, double y_end) {
  if (x_start > x_end || y_start > y_end) return ToolResult::errored("bad params: inverted bounds");
  return objects_result(objects_in_rect(scene, x_start, x_end, y_start, y_end));
}

ToolResult get_all_object_detections(const Scene& scene) {
  std::vector<SceneObject> all = scene.objects;
  std::sort(all.begin(), all.end(),
            [](const SceneObject& a, const SceneObject& b) { return a.id < b.id; });
  return objects_result(std::move(all));
}

ToolResult get_leading_object_future_trajectory(const Scene& scene) {
  const SceneObject* lead = leading_object(scene);
  if (!lead) return ToolResult::not_found();
  const Trajectory* traj = scene.find_trajectory(lead->id);
  if (!traj) return ToolResult::not_found();
  return ToolResult::ok(trajectory_to_json(*traj));
}

ToolResult get_future_trajectories_for_specific_objects(const Scene& scene,
                                                        const std::vector<std::string>& ids) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<const Trajectory*> out;
  for (const auto* t : trajectories_sorted(scene)) {
    if (wanted.count(t->object_id)) out.push_back(t);
  }
  return trajectories_result(out);
}

ToolResult get_future_trajectories_in_range(const Scene& scene, double x_start, double x_end,
                                            double y_start, double y_end) {
  if (x_start > x_end || y_start > y_end) return ToolResult::errored("bad params: inverted bounds");
  std::vector<const Trajectory*> out;
  for (const auto* t : trajectories_sorted(scene)) {
    bool hit = std::any_of(t->waypoints.begin(), t->waypoints.end(), [&](const auto& wp) {
      return wp.position.x >= x_start && wp.position.x <= x_end && wp.position.y >= y_start &&
             wp.position.y <= y_end;
    });
    if (hit) out.push_back(t);
  }
  return trajectories_result(out);
}

ToolResult get_future_waypoint_of_specific_objects_at_timestep(
    const Scene& scene, const std::vector<std::string>& ids, int timestep) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  Json out = Json::array();
  for (const auto* t : trajectories_sorted(scene)) {
    if (!wanted.count(t->object_id)) continue;
    for (const auto& wp : t->waypoints) {
      if (wp.timestep == timestep) {
        out.push_back(Json{{"id", t->object_id}, {"position", position_to_json(wp.position)}});
        break;
      }
    }
  }
  if (out.empty()) return ToolResult::not_found();
  return ToolResult::ok(std::move(out));
}

ToolResult get_all_future_trajectories(const Scene& scene) {
  return trajectories_result(trajectories_sorted(scene));
}

ToolResult get_occupancy_at_locations_for_timestep(const Scene& scene,
                                                   const std::vector<Position>& locations,
                                                   int timestep) {
  Json out = Json::array();
  for (const auto& p : locations) {
    auto v = occupancy_at(scene, p, timestep);
    if (v) {
      out.push_back(*v);
    } else {
      out.push_back(kOutOfScope);
    }
  }
  return ToolResult::ok(std::move(out));
}

ToolResult check_occupancy_for_planned_trajectory(
    const Scene& scene, const std::vector<std::pair<int, Position>>& planned,
    double collision_threshold) {
  int prev = std::numeric_limits<int>::min();
  for (const auto& [t, p] : planned) {
    if (t <= prev) return ToolResult::errored("bad params: timesteps must be strictly increasing");
    prev = t;
  }
  for (const auto& [t, p] : planned) {
    auto v = occupancy_at(scene, p, t);
    // waypoints outside the prediction scope cannot collide
    if (v && *v > collision_threshold) {
      return ToolResult::ok(Json{{"collision", true},
                                 {"first_timestep", t},
                                 {"first_position", position_to_json(p)}});
    }
  }
  return ToolResult::ok(Json{{"collision", false}});
}

ToolResult get_drivable_at_locations(const Scene& scene, const std::vector<Position>& locations) {
  Json out = Json::array();
  for (const auto& p : locations) {
    auto v = drivable_at(scene, p);
    if (v) {
      out.push_back(*v);
    } else {
      out.push_back(kOutOfScope);
    }
  }
  return ToolResult::ok(std::move(out));
}

ToolResult get_lane_category_at_locations(const Scene& scene,
                                          const std::vector<Position>& locations) {
  Json out = Json::array();
  for (const auto& p : locations) {
    auto v = lane_category_at(scene, p);
    if (v) {
      out.push_back(*v);
    } else {
      out.push_back(kOutOfScope);
    }
  }
  return ToolResult::ok(std::move(out));
}

ToolResult get_distance_to_shoulder_at_locations(const Scene& scene,
                                                 const std::vector<Position>& locations) {
  if (!scene.map.shoulder_lines) return ToolResult::not_found();
  Json out = Json::array();
  for (const auto& p : locations) {
    auto v = shoulder_distances_at(scene, p);
    if (v) {
      out.push_back(pair_to_json(v->first, v->second));
    } else {
      out.push_back(kOutOfScope);
    }
  }
  return ToolResult::ok(std::move(out));
}

ToolResult get_current_shoulder(const Scene& scene) {
  ToolResult list = get_distance_to_shoulder_at_locations(scene, {Position{0.0, 0.0}});
  if (!list.is_value()) return list;
  return ToolResult::ok(list.value[0]);
}

ToolResult get_distance_to_lane_divider_at_locations(const Scene& scene,
                                                     const std::vector<Position>& locations) {
  if (scene.map.divider_lines.empty()) return ToolResult::not_found();
  Json out = Json::array();
  for (const auto& p : locations) {
    auto v = divider_distances_at(scene, p);
    if (!v) {
      out.push_back(kOutOfScope);
      continue;
    }
    Json entry;
    entry["left"] = v->left ? Json(*v->left) : Json();
    entry["right"] = v->right ? Json(*v->right) : Json();
    out.push_back(std::move(entry));
  }
  return ToolResult::ok(std::move(out));
}

ToolResult get_current_lane_divider(const Scene& scene) {
  ToolResult list = get_distance_to_lane_divider_at_locations(scene, {Position{0.0, 0.0}});
  if (!list.is_value()) return list;
  return ToolResult::ok(list.value[0]);
}

ToolResult get_nearest_pedestrian_crossing(const Scene& scene) {
  const Position* best = nullptr;
  double best_d = 0.0;
  for (const auto& c : scene.map.crossings) {
    double d = std::hypot(c.x, c.y);
    if (!best || d < best_d) {
      best = &c;
      best_d = d;
    }
  }
  if (!best) return ToolResult::not_found();
  return ToolResult::ok(position_to_json(*best));
}

std::pair<double, double> project_to_raster(const Raster& raster, const Position& p) {
  double u = (p.x + 10.0) / 20.0 * raster.width;
  double v = (1.0 - p.y / 40.0) * raster.height;
  return {u, v};
}

namespace {

bool category_matches(const std::string& category, const std::string& word) {
  if (category.size() != word.size()) return false;
  for (std::size_t i = 0; i < category.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(category[i])) !=
        std::tolower(static_cast<unsigned char>(word[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace

ToolResult get_open_world_vocabulary_detection(const Scene& scene,
                                               const std::vector<std::string>& words) {
  Json out = Json::array();
  for (const auto& word : words) {
    std::vector<const SceneObject*> matches;
    for (const auto& o : scene.objects) {
      if (category_matches(o.category, word)) matches.push_back(&o);
    }
    std::sort(matches.begin(), matches.end(),
              [](const SceneObject* a, const SceneObject* b) { return a->id < b->id; });
    for (const auto* o : matches) {
      auto [u, v] = project_to_raster(scene.front_raster, o->position);
      out.push_back(Json{{"word", word},
                         {"position", Json::array({u, v})},
                         {"size", Json::array({o->width * 2.0, o->length * 2.0})}});
    }
  }
  if (out.empty()) return ToolResult::not_found();
  return ToolResult::ok(std::move(out));
}

ToolResult get_3d_loc_in_cam(const Scene& scene, const std::string& keyword) {
  std::vector<const SceneObject*> matches;
  for (const auto& o : scene.objects) {
    if (category_matches(o.category, keyword)) matches.push_back(&o);
  }
  std::sort(matches.begin(), matches.end(),
            [](const SceneObject* a, const SceneObject* b) { return a->id < b->id; });
  if (matches.empty()) return ToolResult::not_found();
  Json out = Json::array();
  for (const auto* o : matches) {
    // simulated depth: ego-frame forward distance
    out.push_back(Json{{"x", o->position.x}, {"y", o->position.y}, {"depth", o->position.y}});
  }
  return ToolResult::ok(std::move(out));
}

Raster resize_raster(const Raster& input, int target_width, int target_height,
                     ResizeMethod method) {
  if (target_width < 1 || target_height < 1) {
    throw Error("resize_image_info: target dimensions must be >= 1");
  }
  Raster out;
  out.width = target_width;
  out.height = target_height;
  out.pixels.resize(static_cast<std::size_t>(target_width) * target_height);

  if (method == ResizeMethod::nearest) {
    // Center sampling: src = (i + 0.5) * (s / t) - 0.5, halves round toward
    // the smaller index (ceil(src - 0.5)), then clamp.
    auto nearest_index = [](int i, int src_n, int dst_n) {
      double src = (i + 0.5) * (static_cast<double>(src_n) / dst_n) - 0.5;
      int idx = static_cast<int>(std::ceil(src - 0.5));
      return std::clamp(idx, 0, src_n - 1);
    };
    for (int y = 0; y < target_height; ++y) {
      int sy = nearest_index(y, input.height, target_height);
      for (int x = 0; x < target_width; ++x) {
        int sx = nearest_index(x, input.width, target_width);
        out.pixels[static_cast<std::size_t>(y) * target_width + x] = input.at(sx, sy);
      }
    }
    return out;
  }

  // Bilinear with corner alignment: src = i * (s - 1) / (t - 1); a
  // single-pixel target samples the source midpoint. Output rounds half up.
  auto source_coord = [](int i, int src_n, int dst_n) {
    if (dst_n == 1) return (src_n - 1) / 2.0;
    return i * static_cast<double>(src_n - 1) / (dst_n - 1);
  };
  for (int y = 0; y < target_height; ++y) {
    double sy = source_coord(y, input.height, target_height);
    int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, input.height - 1);
    int y1 = std::min(y0 + 1, input.height - 1);
    double fy = sy - y0;
    for (int x = 0; x < target_width; ++x) {
      double sx = source_coord(x, input.width, target_width);
      int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, input.width - 1);
      int x1 = std::min(x0 + 1, input.width - 1);
      double fx = sx - x0;
      double top = input.at(x0, y0) * (1.0 - fx) + input.at(x1, y0) * fx;
      double bottom = input.at(x0, y1) * (1.0 - fx) + input.at(x1, y1) * fx;
      double v = top * (1.0 - fy) + bottom * fy;
      int rounded = static_cast<int>(std::floor(v + 0.5));
      out.pixels[static_cast<std::size_t>(y) * target_width + x] =
          static_cast<uint8_t>(std::clamp(rounded, 0, 255));
    }
  }
  return out;
}

Raster crop_raster(const Raster& input, int x0, int y0, int x1, int y1) {
  if (!(0 <= x0 && x0 < x1 && x1 <= input.width && 0 <= y0 && y0 < y1 && y1 <= input.height)) {
    throw Error("crop_image_info: rect out of bounds");
  }
  Raster out;
  out.width = x1 - x0;
  out.height = y1 - y0;
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      out.pixels[static_cast<std::size_t>(y - y0) * out.width + (x - x0)] = input.at(x, y);
    }
  }
  return out;
}

// ---- dispatcher ----

namespace {

std::string kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::number: return "number";
    case ParamKind::integer: return "integer";
    case ParamKind::string: return "string";
    case ParamKind::string_list: return "string list";
    case ParamKind::id_list: return "id list";
    case ParamKind::position_list: return "position list";
    case ParamKind::plan: return "plan";
  }
  return "?";
}

bool is_position_json(const Json& v) {
  return v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number();
}

bool param_conforms(const Json& v, ParamKind kind) {
  switch (kind) {
    case ParamKind::number:
      return v.is_number();
    case ParamKind::integer:
      return v.is_number_integer();
    case ParamKind::string:
      return v.is_string();
    case ParamKind::string_list:
    case ParamKind::id_list:
      return v.is_array() &&
             std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_string(); });
    case ParamKind::position_list:
      return v.is_array() && std::all_of(v.begin(), v.end(), is_position_json);
    case ParamKind::plan:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) {
               return e.is_array() && e.size() == 2 && e[0].is_number_integer() &&
                      is_position_json(e[1]);
             });
  }
  return false;
}

std::vector<std::string> string_list_param(const Json& v) {
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(e.get<std::string>());
  return out;
}

std::vector<Position> position_list_param(const Json& v) {
  std::vector<Position> out;
  for (const auto& e : v) out.push_back(Position{e[0].get<double>(), e[1].get<double>()});
  return out;
}

std::vector<std::pair<int, Position>> plan_param(const Json& v) {
  std::vector<std::pair<int, Position>> out;
  for (const auto& e : v) {
    out.emplace_back(e[0].get<int>(), Position{e[1][0].get<double>(), e[1][1].get<double>()});
  }
  return out;
}

}  // namespace

void Registry::register_tool(ToolSchema schema, Handler handler) {
  schemas_.push_back(std::move(schema));
  handlers_.push_back(std::move(handler));
}

bool Registry::has(const std::string& name) const { return schema(name) != nullptr; }

const ToolSchema* Registry::schema(const std::string& name) const {
  for (const auto& s : schemas_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::optional<std::string> Registry::check_params(const ToolCall& call) const {
  const ToolSchema* s = schema(call.name);
  if (!s) return "unknown tool";
  const auto& spec = s->param_spec;
  if (!call.params.is_array() || call.params.size() != spec.size()) {
    return "bad params: expected " + std::to_string(spec.size()) + " params, got " +
           std::to_string(call.params.size());
  }
  for (std::size_t p = 0; p < spec.size(); ++p) {
    if (!param_conforms(call.params[p], spec[p].kind)) {
      return "bad params: param " + std::to_string(p) + " (" + spec[p].name + "): expected " +
             kind_name(spec[p].kind);
    }
  }
  return std::nullopt;
}

ToolResult Registry::dispatch(const Scene& scene, const ToolCall& call) const {
  if (auto problem = check_params(call)) return ToolResult::errored(*problem);
  for (std::size_t i = 0; i < schemas_.size(); ++i) {
    if (schemas_[i].name != call.name) continue;
    try {
      return handlers_[i](scene, call.params);
    } catch (const std::exception& e) {
      return ToolResult::errored(e.what());
    }
  }
  return ToolResult::errored("unknown tool");
}

const Registry& default_registry() {
  static const Registry registry = [] {
    Registry r;
    auto none = std::vector<ParamSpec>{};
    auto rect = std::vector<ParamSpec>{{"x_start", ParamKind::number},
                                       {"x_end", ParamKind::number},
                                       {"y_start", ParamKind::number},
                                       {"y_end", ParamKind::number}};

    r.register_tool({"get_leading_object_detection", none, "object or none"},
                    [](const Scene& s, const Json&) { return get_leading_object_detection(s); });
    r.register_tool(
        {"get_surrounding_object_detections", none, "object list or none"},
        [](const Scene& s, const Json&) { return get_surrounding_object_detections(s); });
    r.register_tool({"get_front_object_detections", none, "object list or none"},
                    [](const Scene& s, const Json&) { return get_front_object_detections(s); });
    r.register_tool({"get_object_detections_in_range", rect, "object list or none"},
                    [](const Scene& s, const Json& p) {
                      return get_object_detections_in_range(s, p[0].get<double>(),
                                                            p[1].get<double>(), p[2].get<double>(),
                                                            p[3].get<double>());
                    });
    r.register_tool({"get_all_object_detections", none, "object list or none"},
                    [](const Scene& s, const Json&) { return get_all_object_detections(s); });

    r.register_tool(
        {"get_leading_object_future_trajectory", none, "trajectory or none"},
        [](const Scene& s, const Json&) { return get_leading_object_future_trajectory(s); });
    r.register_tool({"get_future_trajectories_for_specific_objects",
                     {{"ids", ParamKind::id_list}},
                     "trajectory list or none"},
                    [](const Scene& s, const Json& p) {
                      return get_future_trajectories_for_specific_objects(
                          s, string_list_param(p[0]));
                    });
    r.register_tool({"get_future_trajectories_in_range", rect, "trajectory list or none"},
                    [](const Scene& s, const Json& p) {
                      return get_future_trajectories_in_range(s, p[0].get<double>(),
                                                              p[1].get<double>(),
                                                              p[2].get<double>(),
                                                              p[3].get<double>());
                    });
    r.register_tool({"get_future_waypoint_of_specific_objects_at_timestep",
                     {{"ids", ParamKind::id_list}, {"timestep", ParamKind::integer}},
                     "(id, position) list or none"},
                    [](const Scene& s, const Json& p) {
                      return get_future_waypoint_of_specific_objects_at_timestep(
                          s, string_list_param(p[0]), p[1].get<int>());
                    });
    r.register_tool({"get_all_future_trajectories", none, "trajectory list or none"},
                    [](const Scene& s, const Json&) { return get_all_future_trajectories(s); });

    r.register_tool({"get_occupancy_at_locations_for_timestep",
                     {{"locations", ParamKind::position_list}, {"timestep", ParamKind::integer}},
                     "probability-or-out-of-scope list"},
                    [](const Scene& s, const Json& p) {
                      return get_occupancy_at_locations_for_timestep(s, position_list_param(p[0]),
                                                                     p[1].get<int>());
                    });
    r.register_tool({"check_occupancy_for_planned_trajectory",
                     {{"planned", ParamKind::plan}},
                     "collision report"},
                    [&r](const Scene& s, const Json& p) {
                      return check_occupancy_for_planned_trajectory(s, plan_param(p[0]),
                                                                    r.collision_threshold);
                    });

    auto locations = std::vector<ParamSpec>{{"locations", ParamKind::position_list}};
    r.register_tool({"get_drivable_at_locations", locations, "boolean-or-out-of-scope list"},
                    [](const Scene& s, const Json& p) {
                      return get_drivable_at_locations(s, position_list_param(p[0]));
                    });
    r.register_tool({"get_lane_category_at_locations", locations, "label-or-out-of-scope list"},
                    [](const Scene& s, const Json& p) {
                      return get_lane_category_at_locations(s, position_list_param(p[0]));
                    });
    r.register_tool(
        {"get_distance_to_shoulder_at_locations", locations, "(left, right) list or none"},
        [](const Scene& s, const Json& p) {
          return get_distance_to_shoulder_at_locations(s, position_list_param(p[0]));
        });
    r.register_tool({"get_current_shoulder", none, "(left, right) or none"},
                    [](const Scene& s, const Json&) { return get_current_shoulder(s); });
    r.register_tool(
        {"get_distance_to_lane_divider_at_locations", locations, "(left, right) list or none"},
        [](const Scene& s, const Json& p) {
          return get_distance_to_lane_divider_at_locations(s, position_list_param(p[0]));
        });
    r.register_tool({"get_current_lane_divider", none, "(left, right) or none"},
                    [](const Scene& s, const Json&) { return get_current_lane_divider(s); });
    r.register_tool({"get_nearest_pedestrian_crossing", none, "position or none"},
                    [](const Scene& s, const Json&) { return get_nearest_pedestrian_crossing(s); });

    r.register_tool({"get_open_world_vocabulary_detection",
                     {{"words", ParamKind::string_list}},
                     "(word, position, size) list or none"},
                    [](const Scene& s, const Json& p) {
                      return get_open_world_vocabulary_detection(s, string_list_param(p[0]));
                    });
    r.register_tool(
        {"get_3d_loc_in_cam", {{"keyword", ParamKind::string}}, "(x, y, depth) list or none"},
        [](const Scene& s, const Json& p) { return get_3d_loc_in_cam(s, p[0].get<std::string>()); });
    r.register_tool({"resize_image_info",
                     {{"width", ParamKind::integer},
                      {"height", ParamKind::integer},
                      {"method", ParamKind::string}},
                     "raster"},
                    [](const Scene& s, const Json& p) {
                      std::string method = p[2].get<std::string>();
                      if (method != "nearest" && method != "bilinear") {
                        return ToolResult::errored("bad params: param 2 (method): expected "
                                                   "\"nearest\" or \"bilinear\"");
                      }
                      if (p[0].get<int>() < 1 || p[1].get<int>() < 1) {
                        return ToolResult::errored("bad params: target dimensions must be >= 1");
                      }
                      Raster out = resize_raster(
                          s.front_raster, p[0].get<int>(), p[1].get<int>(),
                          method == "nearest" ? ResizeMethod::nearest : ResizeMethod::bilinear);
                      return ToolResult::ok(raster_to_json(out));
                    });
    r.register_tool({"crop_image_info",
                     {{"x0", ParamKind::integer},
                      {"y0", ParamKind::integer},
                      {"x1", ParamKind::integer},
                      {"y1", ParamKind::integer}},
                     "raster"},
                    [](const Scene& s, const Json& p) {
                      int x0 = p[0].get<int>(), y0 = p[1].get<int>();
                      int x1 = p[2].get<int>(), y1 = p[3].get<int>();
                      if (!(0 <= x0 && x0 < x1 && x1 <= s.front_raster.width && 0 <= y0 &&
                            y0 < y1 && y1 <= s.front_raster.height)) {
                        return ToolResult::errored("bad params: rect out of bounds");
                      }
                      return ToolResult::ok(raster_to_json(crop_raster(s.front_raster, x0, y0, x1, y1)));
                    });
    return r;
  }();
  return registry;
}

// ---- serialization ----

Json tool_call_to_json(const ToolCall& call) {
  return Json{{"name", call.name}, {"params", call.params}};
}

ToolCall tool_call_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string() ||
      !doc.contains("params") || !doc["params"].is_array()) {
    throw Error("tool call: expected {\"name\", \"params\"}");
  }
  return ToolCall{doc["name"].get<std::string>(), doc["params"]};
}

Json tool_result_to_json(const ToolResult& result) {
  switch (result.kind) {
    case ToolResult::Kind::value:
      return Json{{"kind", "value"}, {"value", result.value}};
    case ToolResult::Kind::not_found:
      return Json{{"kind", "not_found"}};
    case ToolResult::Kind::error:
      return Json{{"kind", "error"}, {"message", result.message}};
  }
  return Json();
}

ToolResult tool_result_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    throw Error("tool result: expected {\"kind\", ...}");
  }
  std::string kind = doc["kind"].get<std::string>();
  if (kind == "value") {
    if (!doc.contains("value")) throw Error("tool result: value kind requires \"value\"");
    return ToolResult::ok(doc["value"]);
  }
  if (kind == "not_found") return ToolResult::not_found();
  if (kind == "error") {
    if (!doc.contains("message") || !doc["message"].is_string()) {
      throw Error("tool result: error kind requires \"message\"");
    }
    return ToolResult::errored(doc["message"].get<std::string>());
  }
  throw Error("tool result: unknown kind '" + kind + "'");
}

namespace {

void collect_leaves(const Json& v, std::vector<std::string>& out) {
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_boolean()) {
    out.push_back(v.get<bool>() ? "true" : "false");
  } else if (v.is_number()) {
    out.push_back(fmt_num(v.get<double>()));
  } else if (v.is_array() || v.is_object()) {
    for (const auto& e : v) collect_leaves(e, out);
  }
}

}  // namespace

std::vector<std::string> result_value_tokens(const ToolResult& result) {
  std::vector<std::string> out;
  if (result.is_value()) collect_leaves(result.value, out);
  return out;
}

}  // namespace driveagent::tools
