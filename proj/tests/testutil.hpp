#pragma once

// Shared helpers for the test suites: fixture paths, randomized scene and
// trace generators, finite-difference checking.

#include <cmath>
#include <string>
#include <vector>

#include "driveagent/catalog.hpp"
#include "driveagent/fixtures.hpp"
#include "driveagent/scene.hpp"
#include "driveagent/trace.hpp"
#include "driveagent/util.hpp"

#ifndef DRIVEAGENT_FIXTURES_DIR
#define DRIVEAGENT_FIXTURES_DIR "fixtures"
#endif

namespace driveagent::testutil {

inline std::string fixture_path(const std::string& rel) {
  return std::string(DRIVEAGENT_FIXTURES_DIR) + "/" + rel;
}

/// Random scene for oracle-equivalence properties: objects, trajectories and
/// map layers drawn inside the standard extents. Ids are zero-padded so the
/// lexicographic tool ordering equals numeric order.
inline Scene random_scene(Rng& rng) {
  Scene s;
  s.id = "rand" + std::to_string(rng.below(1 << 30));
  int nobj = static_cast<int>(rng.below(13));
  for (int i = 0; i < nobj; ++i) {
    SceneObject o;
    char id[8];
    std::snprintf(id, sizeof(id), "O%02d", i + 1);
    o.id = id;
    o.category = (i % 3 == 0) ? "car" : (i % 3 == 1) ? "pedestrian" : "truck";
    o.position = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 40.0)};
    o.width = rng.uniform(0.3, 3.0);
    o.length = rng.uniform(0.3, 6.0);
    s.objects.push_back(o);
  }
  for (const auto& o : s.objects) {
    if (rng.uniform() < 0.6) {
      Trajectory t;
      t.object_id = o.id;
      int nwp = 1 + static_cast<int>(rng.below(3));
      for (int w = 0; w < nwp; ++w) {
        t.waypoints.push_back({w + 1, {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 40.0)}});
      }
      s.trajectories.push_back(t);
    }
  }

  s.occupancy.x_lo = -20.0;
  s.occupancy.x_hi = 20.0;
  s.occupancy.y_lo = -20.0;
  s.occupancy.y_hi = 40.0;
  s.occupancy.resolution = 2.0;
  s.occupancy.timesteps = 1 + static_cast<int>(rng.below(3));
  std::size_t cells = static_cast<std::size_t>(s.occupancy.nx()) * s.occupancy.ny() *
                      s.occupancy.timesteps;
  s.occupancy.values.resize(cells);
  for (auto& v : s.occupancy.values) v = rng.uniform() < 0.2 ? rng.uniform() : 0.0;

  s.map.x_lo = -20.0;
  s.map.x_hi = 20.0;
  s.map.y_lo = -20.0;
  s.map.y_hi = 40.0;
  s.map.resolution = 2.0;
  std::size_t map_cells = static_cast<std::size_t>(s.map.nx()) * s.map.ny();
  s.map.drivable.resize(map_cells);
  s.map.lane_category.resize(map_cells);
  const char* lanes[3] = {"ego", "adjacent", "off-road"};
  for (std::size_t i = 0; i < map_cells; ++i) {
    s.map.drivable[i] = rng.uniform() < 0.5 ? 1 : 0;
    s.map.lane_category[i] = lanes[rng.below(3)];
  }
  if (rng.uniform() < 0.8) {
    double left = rng.uniform(-10.0, -1.0);
    s.map.shoulder_lines = {left, rng.uniform(1.0, 10.0)};
  }
  int ndiv = static_cast<int>(rng.below(4));
  for (int i = 0; i < ndiv; ++i) s.map.divider_lines.push_back(rng.uniform(-8.0, 8.0));
  int ncross = static_cast<int>(rng.below(3));
  for (int i = 0; i < ncross; ++i) {
    s.map.crossings.push_back({rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 40.0)});
  }

  s.front_raster.width = 8;
  s.front_raster.height = 6;
  s.front_raster.pixels.resize(48);
  for (auto& p : s.front_raster.pixels) p = static_cast<uint8_t>(rng.below(256));
  return s;
}

/// Random structurally-valid trace for round-trip and masking properties.
inline Trace random_valid_trace(Rng& rng) {
  const Catalog& catalog = Catalog::standard();
  Trace t;
  t.scene_id = "s" + std::to_string(rng.below(100));
  t.question_id = "q" + std::to_string(rng.below(100));
  int nsteps = static_cast<int>(rng.below(6));
  bool concluded = false;
  for (int i = 0; i < nsteps && !concluded; ++i) {
    ReasoningStep step;
    step.index = i + 1;
    const auto& entry = catalog.entries()[rng.below(catalog.entries().size())];
    step.sub_question = entry.question;
    bool with_tool = rng.uniform() < 0.5;
    step.uncertainty_flag = with_tool;
    if (with_tool) {
      step.tool_call = entry.invocation;
      switch (rng.below(3)) {
        case 0:
          step.observation = tools::ToolResult::ok(
              Json{{"value", rng.uniform(-10.0, 10.0)}, {"tag", "obs"}});
          break;
        case 1:
          step.observation = tools::ToolResult::not_found();
          break;
        default:
          step.observation = tools::ToolResult::errored("simulated failure");
          break;
      }
    } else {
      step.guessed_answer = "answer " + std::to_string(rng.below(1000));
    }
    if (rng.uniform() < 0.3 || i == nsteps - 1) {
      if (rng.uniform() < 0.7) {
        step.action_choice = ActionChoice::conclude;
        concluded = true;
      }
    }
    t.steps.push_back(std::move(step));
  }
  // reindex after possible early conclude
  for (std::size_t i = 0; i < t.steps.size(); ++i) t.steps[i].index = static_cast<int>(i) + 1;
  t.final_answer = "final " + std::to_string(rng.below(1000));
  return t;
}

/// Componentwise central finite difference of f at x.
template <typename F>
std::vector<double> finite_difference(F&& f, std::vector<double>& x, double h) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double keep = x[i];
    x[i] = keep + h;
    double hi = f();
    x[i] = keep - h;
    double lo = f();
    x[i] = keep;
    grad[i] = (hi - lo) / (2.0 * h);
  }
  return grad;
}

/// max_i |a_i - b_i| / max(1, max_i |a_i|, max_i |b_i|)
inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0;
  double den = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max({den, std::abs(a[i]), std::abs(b[i])});
  }
  return num / den;
}

}  // namespace driveagent::testutil
