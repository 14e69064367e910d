#pragma once

#include <functional>
#include <string>
#include <vector>

#include "driveagent/scene.hpp"
#include "driveagent/util.hpp"

namespace driveagent::tools {

// Parameter kinds understood by the dispatcher. Positions are encoded as
// [x, y] pairs inside params; a plan is [[timestep, [x, y]], ...].
enum class ParamKind {
  number,
  integer,
  string,
  string_list,
  id_list,
  position_list,
  plan,
};

struct ParamSpec {
  std::string name;
  ParamKind kind;
};

struct ToolSchema {
  std::string name;
  std::vector<ParamSpec> param_spec;
  std::string result_spec;
};

struct ToolCall {
  std::string name;
  Json params = Json::array();

  friend bool operator==(const ToolCall& a, const ToolCall& b) {
    return a.name == b.name && a.params == b.params;
  }
};

struct ToolResult {
  enum class Kind { value, not_found, error };
  Kind kind = Kind::not_found;
  Json value;           // payload when kind == value
  std::string message;  // diagnostic when kind == error

  static ToolResult ok(Json payload) {
    return ToolResult{Kind::value, std::move(payload), {}};
  }
  static ToolResult not_found() { return ToolResult{Kind::not_found, {}, {}}; }
  static ToolResult errored(std::string msg) {
    return ToolResult{Kind::error, {}, std::move(msg)};
  }

  bool is_value() const { return kind == Kind::value; }
  bool is_not_found() const { return kind == Kind::not_found; }
  bool is_error() const { return kind == Kind::error; }

  friend bool operator==(const ToolResult& a, const ToolResult& b) {
    return a.kind == b.kind && a.value == b.value && a.message == b.message;
  }
};

/// Per-location marker for points outside the occupancy or map scope.
inline const char* kOutOfScope = "out_of_scope";

class Registry {
 public:
  using Handler = std::function<ToolResult(const Scene&, const Json& params)>;

  void register_tool(ToolSchema schema, Handler handler);
  bool has(const std::string& name) const;
  const ToolSchema* schema(const std::string& name) const;
  const std::vector<ToolSchema>& schemas() const { return schemas_; }

  /// Routes to the named tool. Unknown names yield Error("unknown tool");
  /// schema-invalid params yield Error("bad params: <detail>") without
  /// invoking the handler.
  ToolResult dispatch(const Scene& scene, const ToolCall& call) const;

  /// Schema validation only: nullopt when the call conforms, otherwise the
  /// same diagnostic dispatch would produce.
  std::optional<std::string> check_params(const ToolCall& call) const;

  double collision_threshold = 0.5;

 private:
  std::vector<ToolSchema> schemas_;
  std::vector<Handler> handlers_;
};

/// Registry with the full tool library registered.
const Registry& default_registry();

// ---- direct tool entry points (registry handlers delegate to these) ----

ToolResult get_leading_object_detection(const Scene& scene);
ToolResult get_surrounding_object_detections(const Scene& scene);
ToolResult get_front_object_detections(const Scene& scene);
ToolResult get_object_detections_in_range(const Scene& scene, double x_start, double x_end,
                                          double y_start, double y_end);
ToolResult get_all_object_detections(const Scene& scene);
ToolResult get_leading_object_future_trajectory(const Scene& scene);
ToolResult get_future_trajectories_for_specific_objects(const Scene& scene,
                                                        const std::vector<std::string>& ids);
ToolResult get_future_trajectories_in_range(const Scene& scene, double x_start, double x_end,
                                            double y_start, double y_end);
ToolResult get_future_waypoint_of_specific_objects_at_timestep(
    const Scene& scene, const std::vector<std::string>& ids, int timestep);
ToolResult get_all_future_trajectories(const Scene& scene);
ToolResult get_occupancy_at_locations_for_timestep(const Scene& scene,
                                                   const std::vector<Position>& locations,
                                                   int timestep);
ToolResult check_occupancy_for_planned_trajectory(
    const Scene& scene, const std::vector<std::pair<int, Position>>& planned,
    double collision_threshold = 0.5);
ToolResult get_drivable_at_locations(const Scene& scene, const std::vector<Position>& locations);
ToolResult get_lane_category_at_locations(const Scene& scene,
                                          const std::vector<Position>& locations);
ToolResult get_distance_to_shoulder_at_locations(const Scene& scene,
                                                 const std::vector<Position>& locations);
ToolResult get_current_shoulder(const Scene& scene);
ToolResult get_distance_to_lane_divider_at_locations(const Scene& scene,
                                                     const std::vector<Position>& locations);
ToolResult get_current_lane_divider(const Scene& scene);
ToolResult get_nearest_pedestrian_crossing(const Scene& scene);
ToolResult get_open_world_vocabulary_detection(const Scene& scene,
                                               const std::vector<std::string>& words);
ToolResult get_3d_loc_in_cam(const Scene& scene, const std::string& keyword);

/// Raster utilities; the registry variants operate on scene.front_raster.
enum class ResizeMethod { nearest, bilinear };
Raster resize_raster(const Raster& input, int target_width, int target_height,
                     ResizeMethod method);
Raster crop_raster(const Raster& input, int x0, int y0, int x1, int y1);

// ---- projection used by the visual tools ----
// Linear map from ego frame x in [-10,10], y in [0,40] onto raster columns
// u in [0,W] and rows v in [0,H] (v grows toward the ego); box size is
// object size * 2 pixels per meter.
std::pair<double, double> project_to_raster(const Raster& raster, const Position& p);

// ---- serialization ----

Json tool_call_to_json(const ToolCall& call);
ToolCall tool_call_from_json(const Json& doc);

Json tool_result_to_json(const ToolResult& result);
ToolResult tool_result_from_json(const Json& doc);

Json scene_object_to_json(const SceneObject& o);
Json trajectory_to_json(const Trajectory& t);
Json raster_to_json(const Raster& r);

/// All primitive leaves of a Value payload, stringified with fmt_num for
/// numbers. The reward engine's reference rule matches against these.
std::vector<std::string> result_value_tokens(const ToolResult& result);

}  // namespace driveagent::tools
