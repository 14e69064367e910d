#include "driveagent/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "driveagent/datagen.hpp"
#include "driveagent/tools.hpp"

namespace driveagent::fixtures {

namespace {

constexpr double kExtent[4] = {-20.0, 20.0, -20.0, 40.0};  // x_lo,x_hi,y_lo,y_hi

/// Occupancy from object positions: 1.0 exactly in the cell holding each
/// object's position at that timestep (t=0 uses current positions, t>=1 the
/// trajectory waypoints), 0.0 elsewhere.
OccupancyField make_occupancy(const std::vector<SceneObject>& objects,
                              const std::vector<Trajectory>& trajectories, int timesteps) {
  OccupancyField occ;
  occ.x_lo = kExtent[0];
  occ.x_hi = kExtent[1];
  occ.y_lo = kExtent[2];
  occ.y_hi = kExtent[3];
  occ.resolution = 1.0;
  occ.timesteps = timesteps;
  occ.values.assign(static_cast<std::size_t>(occ.nx()) * occ.ny() * timesteps, 0.0);

  auto mark = [&](const Position& p, int t) {
    if (!occ.contains(p) || t >= timesteps) return;
    auto [ix, iy] = occ.cell_of(p);
    occ.values[occ.index(ix, iy, t)] = 1.0;
  };
  for (const auto& o : objects) mark(o.position, 0);
  for (const auto& traj : trajectories) {
    for (const auto& wp : traj.waypoints) mark(wp.position, wp.timestep);
  }
  return occ;
}

/// Lane grid from lateral bounds, evaluated at cell centers: "ego" between
/// the inner dividers, "adjacent" between the shoulders, "off-road" beyond.
MapLayers make_map(double shoulder_left, double shoulder_right, double divider_left,
                   double divider_right, std::vector<Position> crossings) {
  MapLayers map;
  map.x_lo = kExtent[0];
  map.x_hi = kExtent[1];
  map.y_lo = kExtent[2];
  map.y_hi = kExtent[3];
  map.resolution = 1.0;
  map.shoulder_lines = {shoulder_left, shoulder_right};
  map.divider_lines = {divider_left, divider_right};
  map.crossings = std::move(crossings);

  int nx = map.nx();
  int ny = map.ny();
  map.drivable.resize(static_cast<std::size_t>(nx) * ny);
  map.lane_category.resize(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      double cx = map.x_lo + (ix + 0.5) * map.resolution;
      bool drivable = cx >= shoulder_left && cx <= shoulder_right;
      std::string lane = "off-road";
      if (cx >= divider_left && cx <= divider_right) {
        lane = "ego";
      } else if (drivable) {
        lane = "adjacent";
      }
      std::size_t i = static_cast<std::size_t>(iy) * nx + ix;
      map.drivable[i] = drivable ? 1 : 0;
      map.lane_category[i] = lane;
    }
  }
  return map;
}

/// Front camera render: dark background, a road band between the projected
/// shoulders, objects as bright boxes.
Raster make_raster(const std::vector<SceneObject>& objects, double shoulder_left,
                   double shoulder_right) {
  Raster r;
  r.width = 40;
  r.height = 24;
  r.pixels.assign(static_cast<std::size_t>(r.width) * r.height, 32);

  auto column = [&](double x) {
    return static_cast<int>(std::floor((x + 10.0) / 20.0 * r.width));
  };
  int road_lo = std::clamp(column(shoulder_left), 0, r.width - 1);
  int road_hi = std::clamp(column(shoulder_right), 0, r.width - 1);
  for (int y = 0; y < r.height; ++y) {
    for (int x = road_lo; x <= road_hi; ++x) {
      r.pixels[static_cast<std::size_t>(y) * r.width + x] = 96;
    }
  }

  for (const auto& o : objects) {
    auto [u, v] = tools::project_to_raster(r, o.position);
    int half_w = std::max(1, static_cast<int>(o.width));  // size * 2 px/m / 2
    int half_h = std::max(1, static_cast<int>(o.length));
    for (int y = static_cast<int>(v) - half_h; y <= static_cast<int>(v) + half_h; ++y) {
      for (int x = static_cast<int>(u) - half_w; x <= static_cast<int>(u) + half_w; ++x) {
        if (x >= 0 && x < r.width && y >= 0 && y < r.height) {
          r.pixels[static_cast<std::size_t>(y) * r.width + x] = 224;
        }
      }
    }
  }
  return r;
}

QAItem mcq(const std::string& id, const std::string& question,
           std::vector<std::pair<std::string, std::string>> options, const std::string& truth) {
  QAItem qa;
  qa.id = id;
  qa.question = question;
  for (auto& [label, text] : options) qa.options.push_back({label, text});
  qa.ground_truth_answer = truth;
  return qa;
}

}  // namespace

Scene scene_s0() {
  Scene s;
  s.id = "s0";
  s.objects = {
      {"O1", "car", {0.0, 8.0}, 2.0, 4.5},
      {"O2", "car", {3.0, 15.0}, 2.0, 4.5},
      {"O3", "pedestrian", {-8.0, 2.0}, 0.5, 0.5},
  };
  s.trajectories = {
      {"O1", {{1, {0.0, 12.0}}, {2, {0.0, 16.0}}}},
      {"O2", {{1, {3.0, 15.0}}}},
  };
  s.occupancy = make_occupancy(s.objects, s.trajectories, 3);
  s.map = make_map(-6.0, 6.0, -2.0, 2.0, {{0.0, 20.0}});
  s.front_raster = make_raster(s.objects, -6.0, 6.0);

  s.qa_items = {
      mcq("s0-q1", "What is the leading object?",
          {{"A", "car"}, {"B", "pedestrian"}, {"C", "bicycle"}, {"D", "none"}}, "A"),
      mcq("s0-q2", "How far ahead is the leading object in meters?",
          {{"A", "4"}, {"B", "8"}, {"C", "15"}, {"D", "20"}}, "B"),
      mcq("s0-q3", "How many objects are in the front zone?",
          {{"A", "1"}, {"B", "2"}, {"C", "3"}, {"D", "0"}}, "B"),
      mcq("s0-q4", "Is the position four meters to the left of the ego vehicle drivable?",
          {{"A", "yes"}, {"B", "no"}}, "A"),
      mcq("s0-q5", "What is the lane category at the ego position?",
          {{"A", "ego"}, {"B", "adjacent"}, {"C", "off-road"}}, "A"),
      mcq("s0-q6", "Does the planned ego-lane path collide within the prediction horizon?",
          {{"A", "yes"}, {"B", "no"}}, "B"),
      mcq("s0-q7", "How far away is the nearest pedestrian crossing in meters?",
          {{"A", "10"}, {"B", "20"}, {"C", "30"}}, "B"),
      mcq("s0-q8", "How far is the left road shoulder from the ego position in meters?",
          {{"A", "2"}, {"B", "6"}, {"C", "9"}}, "B"),
  };
  return s;
}

Scene scene_s1() {
  Scene s;
  s.id = "s1";
  s.objects = {
      {"O1", "car", {0.0, 10.0}, 2.0, 4.5},
      {"O2", "truck", {-4.0, 18.0}, 2.5, 6.0},
      {"O3", "pedestrian", {7.0, 3.0}, 0.5, 0.5},
  };
  s.trajectories = {
      {"O1", {{1, {0.0, 14.0}}, {2, {0.0, 18.0}}}},
      {"O3", {{1, {6.0, 3.0}}, {2, {5.0, 3.0}}}},
  };
  s.occupancy = make_occupancy(s.objects, s.trajectories, 3);
  s.map = make_map(-4.0, 8.0, -2.0, 2.0, {{0.0, 24.0}, {2.0, -6.0}});
  s.front_raster = make_raster(s.objects, -4.0, 8.0);

  s.qa_items = {
      mcq("s1-q1", "How far ahead is the leading object in meters?",
          {{"A", "10"}, {"B", "14"}, {"C", "18"}}, "A"),
      mcq("s1-q2", "What is the leading object?",
          {{"A", "car"}, {"B", "truck"}, {"C", "pedestrian"}, {"D", "none"}}, "A"),
      mcq("s1-q3", "How far is the left road shoulder from the ego position in meters?",
          {{"A", "4"}, {"B", "8"}, {"C", "6"}}, "A"),
      mcq("s1-q4", "How far away is the nearest pedestrian crossing in meters?",
          {{"A", "6.3"}, {"B", "24"}, {"C", "31"}}, "A"),
      mcq("s1-q5", "How many objects are in the front zone?",
          {{"A", "1"}, {"B", "2"}, {"C", "3"}}, "B"),
      mcq("s1-q6", "Is the position four meters to the left of the ego vehicle drivable?",
          {{"A", "yes"}, {"B", "no"}}, "A"),
  };
  return s;
}

void attach_reference_traces(Scene& scene) {
  OracleGenerator generator(&Catalog::standard());
  for (auto& qa : scene.qa_items) {
    Trace ref = generator.propose(scene, qa, 1, 0).front();
    qa.reference_trace = trace_to_json(ref);
  }
}

}  // namespace driveagent::fixtures
