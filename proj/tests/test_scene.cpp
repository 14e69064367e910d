#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "testutil.hpp"

using namespace driveagent;
using testutil::fixture_path;

TEST_CASE("fixture s0 loads with the documented contents") {
  Scene s = load_scene(fixture_path("scenes/s0.json"));
  CHECK(s.id == "s0");
  CHECK(s.objects.size() == 3);
  CHECK(s.trajectories.size() == 2);
  CHECK(s.qa_items.size() == 8);
  REQUIRE(s.find_object("O1") != nullptr);
  CHECK(s.find_object("O1")->position == Position{0.0, 8.0});
  CHECK(s.find_object("O3")->category == "pedestrian");
  REQUIRE(s.map.shoulder_lines.has_value());
  CHECK(s.map.shoulder_lines->first == -6.0);
  CHECK(s.map.shoulder_lines->second == 6.0);
}

TEST_CASE("save/load round-trips the canonical form byte-exactly") {
  std::string canonical = read_file(fixture_path("scenes/s0.json"));
  Scene s = load_scene(fixture_path("scenes/s0.json"));
  std::string tmp = (std::filesystem::temp_directory_path() / "s0_roundtrip.json").string();
  save_scene(s, tmp);
  CHECK(read_file(tmp) == canonical);
  std::filesystem::remove(tmp);
}

TEST_CASE("invariant violations are reported by name") {
  Scene s = fixtures::scene_s0();

  SUBCASE("duplicate object id") {
    s.objects.push_back(s.objects.front());
    auto errors = validate_scene(s);
    REQUIRE(!errors.empty());
    bool found = std::any_of(errors.begin(), errors.end(), [](const std::string& e) {
      return e.find("duplicate id") != std::string::npos;
    });
    CHECK(found);
  }
  SUBCASE("non-positive size") {
    s.objects[0].width = 0.0;
    auto errors = validate_scene(s);
    REQUIRE(!errors.empty());
    CHECK(errors.front().find("width") != std::string::npos);
  }
  SUBCASE("trajectory referencing unknown object") {
    s.trajectories.push_back({"ghost", {{1, {0.0, 0.0}}}});
    CHECK(!validate_scene(s).empty());
  }
  SUBCASE("non-increasing waypoints") {
    s.trajectories[0].waypoints.push_back({1, {0.0, 0.0}});
    CHECK(!validate_scene(s).empty());
  }
  SUBCASE("occupancy value out of range") {
    s.occupancy.values[0] = 1.5;
    CHECK(!validate_scene(s).empty());
  }
  SUBCASE("ground truth not an option label") {
    s.qa_items[0].ground_truth_answer = "Z";
    CHECK(!validate_scene(s).empty());
  }
  SUBCASE("empty objects list stays valid") {
    Scene empty = fixtures::scene_s0();
    empty.objects.clear();
    empty.trajectories.clear();
    // occupancy marks object cells; rebuild as all-free
    std::fill(empty.occupancy.values.begin(), empty.occupancy.values.end(), 0.0);
    CHECK(validate_scene(empty).empty());
  }
}

TEST_CASE("load_scene rejects duplicate ids with a diagnostic") {
  Scene s = fixtures::scene_s0();
  s.objects.push_back(s.objects.front());
  std::string tmp = (std::filesystem::temp_directory_path() / "dup.json").string();
  write_file(tmp, scene_to_json(s).dump(2));
  CHECK_THROWS_WITH_AS(load_scene(tmp), doctest::Contains("duplicate id"), Error);
  std::filesystem::remove(tmp);
}

TEST_CASE("objects_in_rect: closed rectangles ordered by id") {
  Scene s = fixtures::scene_s0();

  auto ids = [](const std::vector<SceneObject>& objs) {
    std::vector<std::string> out;
    for (const auto& o : objs) out.push_back(o.id);
    return out;
  };

  CHECK(ids(objects_in_rect(s, -5, 5, 0, 10)) == std::vector<std::string>{"O1"});
  CHECK(ids(objects_in_rect(s, -100, 100, -100, 100)) ==
        std::vector<std::string>{"O1", "O2", "O3"});
  // degenerate rect exactly on O1: closed boundaries include it
  CHECK(ids(objects_in_rect(s, 0, 0, 8, 8)) == std::vector<std::string>{"O1"});
  CHECK_THROWS_AS(objects_in_rect(s, 5, -5, 0, 10), Error);
}

TEST_CASE("objects_in_rect equals the naive filter on random scenes") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    Scene s = testutil::random_scene(rng);
    double xs[2] = {rng.uniform(-25.0, 25.0), rng.uniform(-25.0, 25.0)};
    double ys[2] = {rng.uniform(-25.0, 45.0), rng.uniform(-25.0, 45.0)};
    double x_lo = std::min(xs[0], xs[1]), x_hi = std::max(xs[0], xs[1]);
    double y_lo = std::min(ys[0], ys[1]), y_hi = std::max(ys[0], ys[1]);

    std::vector<std::string> naive;
    for (const auto& o : s.objects) {
      if (o.position.x >= x_lo && o.position.x <= x_hi && o.position.y >= y_lo &&
          o.position.y <= y_hi) {
        naive.push_back(o.id);
      }
    }
    std::sort(naive.begin(), naive.end());

    auto got = objects_in_rect(s, x_lo, x_hi, y_lo, y_hi);
    REQUIRE(got.size() == naive.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].id == naive[i]);
  }
}

TEST_CASE("occupancy_at: fixture probes and scope contract") {
  Scene s = fixtures::scene_s0();
  CHECK(occupancy_at(s, {0.0, 16.0}, 2) == 1.0);       // O1 waypoint cell at t=2
  CHECK(occupancy_at(s, {100.0, 0.0}, 0) == std::nullopt);
  CHECK(occupancy_at(s, {5.0, 5.0}, 0) == 0.0);
  CHECK(occupancy_at(s, {0.0, 8.0}, 0) == 1.0);        // O1 current cell
  CHECK(occupancy_at(s, {0.0, 0.0}, 3) == std::nullopt);  // past the horizon
  CHECK(occupancy_at(s, {0.0, 0.0}, -1) == std::nullopt);

  SUBCASE("in-scope values stay in [0,1] on random scenes") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      Scene r = testutil::random_scene(rng);
      for (int probe = 0; probe < 20; ++probe) {
        Position p{rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 40.0)};
        auto v = occupancy_at(r, p, static_cast<int>(rng.below(r.occupancy.timesteps)));
        REQUIRE(v.has_value());
        CHECK(*v >= 0.0);
        CHECK(*v <= 1.0);
      }
    }
  }
}

TEST_CASE("map queries: drivability, lanes, shoulders, dividers") {
  Scene s = fixtures::scene_s0();
  CHECK(drivable_at(s, {0.0, 5.0}) == true);
  CHECK(drivable_at(s, {10.0, 5.0}) == false);
  CHECK(drivable_at(s, {0.0, 100.0}) == std::nullopt);
  CHECK(lane_category_at(s, {0.0, 5.0}) == "ego");
  CHECK(lane_category_at(s, {4.0, 5.0}) == "adjacent");
  CHECK(lane_category_at(s, {10.0, 5.0}) == "off-road");

  auto sh = shoulder_distances_at(s, {3.0, 5.0});
  REQUIRE(sh.has_value());
  CHECK(sh->first == doctest::Approx(9.0));
  CHECK(sh->second == doctest::Approx(3.0));

  auto div = divider_distances_at(s, {1.0, 5.0});
  REQUIRE(div.has_value());
  CHECK(div->left == doctest::Approx(3.0));
  CHECK(div->right == doctest::Approx(1.0));
}
