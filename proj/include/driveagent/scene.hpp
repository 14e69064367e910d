#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "driveagent/util.hpp"

namespace driveagent {

// Ego frame: origin at the ego vehicle, +y forward, +x right, meters.
struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

struct SceneObject {
  std::string id;
  std::string category;
  Position position;
  double width = 0.0;   // meters, lateral
  double length = 0.0;  // meters, longitudinal
};

struct TrajectoryWaypoint {
  int timestep = 1;  // >= 1, strictly increasing within a trajectory
  Position position;
};

struct Trajectory {
  std::string object_id;
  std::vector<TrajectoryWaypoint> waypoints;
};

/// Per-cell, per-timestep occupancy probability over a closed rectangular
/// extent. Cell (ix, iy) covers [x_lo + ix*res, x_lo + (ix+1)*res) except the
/// last cell along each axis, which also owns the closed upper edge.
struct OccupancyField {
  double x_lo = 0.0, x_hi = 0.0;
  double y_lo = 0.0, y_hi = 0.0;
  double resolution = 1.0;
  int timesteps = 1;
  std::vector<double> values;  // [t][iy][ix] flattened

  int nx() const;
  int ny() const;
  bool contains(const Position& p) const;
  std::size_t index(int ix, int iy, int t) const;
  /// Cell of a contained position (upper edges clamp into the last cell).
  std::pair<int, int> cell_of(const Position& p) const;
};

struct MapLayers {
  double x_lo = 0.0, x_hi = 0.0;
  double y_lo = 0.0, y_hi = 0.0;
  double resolution = 1.0;
  std::vector<uint8_t> drivable;          // [iy][ix]
  std::vector<std::string> lane_category; // [iy][ix]
  std::optional<std::pair<double, double>> shoulder_lines;  // left x, right x
  std::vector<double> divider_lines;                        // lateral offsets
  std::vector<Position> crossings;

  int nx() const;
  int ny() const;
  bool contains(const Position& p) const;
  std::pair<int, int> cell_of(const Position& p) const;
};

/// Row-major grayscale raster, intensities 0-255.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

struct QAOption {
  std::string label;
  std::string text;
};

struct QAItem {
  std::string id;
  std::string question;
  std::vector<QAOption> options;  // empty = free-form answer
  std::string ground_truth_answer;
  // Reference reasoning trace, kept as raw JSON so the scene layer does not
  // depend on the trace layer; consumers parse it on demand.
  std::optional<Json> reference_trace;
};

struct Scene {
  std::string id;
  std::vector<SceneObject> objects;
  std::vector<Trajectory> trajectories;
  OccupancyField occupancy;
  MapLayers map;
  Raster front_raster;
  std::vector<QAItem> qa_items;

  const SceneObject* find_object(const std::string& id) const;
  const Trajectory* find_trajectory(const std::string& object_id) const;
  const QAItem* find_qa(const std::string& qa_id) const;
};

/// All invariant violations, empty when the scene is valid. Messages name the
/// violated invariant and the offending field path.
std::vector<std::string> validate_scene(const Scene& scene);

/// Loads and validates a scene file. Throws IoError for unreadable files,
/// Error with line/field diagnostics for parse or invariant failures.
Scene load_scene(const std::string& path);
Scene scene_from_json(const Json& doc);

/// Canonical serialization; load_scene(save) round-trips byte-exactly.
Json scene_to_json(const Scene& scene);
void save_scene(const Scene& scene, const std::string& path);

/// Objects whose position lies in the closed rectangle, ordered by id.
/// Inverted bounds throw Error.
std::vector<SceneObject> objects_in_rect(const Scene& scene, double x_lo, double x_hi,
                                         double y_lo, double y_hi);

/// Occupancy value at (p, t); nullopt when p is outside the extents or
/// t is not in [0, timesteps).
std::optional<double> occupancy_at(const Scene& scene, const Position& p, int t);

/// Map layer queries; nullopt = outside the map extent.
std::optional<bool> drivable_at(const Scene& scene, const Position& p);
std::optional<std::string> lane_category_at(const Scene& scene, const Position& p);

/// (x - left_shoulder_x, right_shoulder_x - x); outer nullopt = out of scope.
/// Requires scene.map.shoulder_lines (callers gate on it).
std::optional<std::pair<double, double>> shoulder_distances_at(const Scene& scene,
                                                               const Position& p);

struct DividerDistances {
  std::optional<double> left;   // x - nearest divider <= x
  std::optional<double> right;  // nearest divider >= x - x
};
std::optional<DividerDistances> divider_distances_at(const Scene& scene, const Position& p);

}  // namespace driveagent
