#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "testutil.hpp"

using namespace driveagent;

TEST_CASE("standard catalog shape") {
  const Catalog& c = Catalog::standard();
  CHECK(c.entries().size() == 8);
  CHECK(c.invocations().size() == 7);  // leading_object and leading_distance share one
  for (const auto& e : c.entries()) {
    CHECK(tools::default_registry().has(e.invocation.name));
  }
}

TEST_CASE("question matching: exact and fuzzy") {
  const Catalog& c = Catalog::standard();
  int exact = c.entry_by_question("What is the leading object?");
  CHECK(exact == c.entry_index("leading_object"));
  CHECK(c.entry_by_question("nonsense?") == -1);
  CHECK(c.match_question("What is the leading object?") == exact);
  CHECK(c.match_question("how far ahead is the leading object") ==
        c.entry_index("leading_distance"));
  CHECK(c.match_question("nearest pedestrian crossing distance?") ==
        c.entry_index("crossing_distance"));
}

TEST_CASE("expected values on the fixture scene") {
  const Catalog& c = Catalog::standard();
  Scene s = fixtures::scene_s0();
  CHECK(expected_value(c, c.entry_index("leading_object"), s) == "car O1");
  CHECK(expected_value(c, c.entry_index("leading_distance"), s) == "8");
  CHECK(expected_value(c, c.entry_index("front_objects"), s) == "2");
  CHECK(expected_value(c, c.entry_index("drivable_left"), s) == "yes");
  CHECK(expected_value(c, c.entry_index("collision_ahead"), s) == "no");
  CHECK(expected_value(c, c.entry_index("lane_at_ego"), s) == "ego");
  CHECK(expected_value(c, c.entry_index("crossing_distance"), s) == "20");
  CHECK(expected_value(c, c.entry_index("shoulder_left_distance"), s) == "6");
}

TEST_CASE("subset catalogs rebuild the invocation list") {
  const Catalog& c = Catalog::standard();
  Catalog small = c.subset({"leading_object", "drivable_left"});
  CHECK(small.entries().size() == 2);
  CHECK(small.invocations().size() == 2);
  CHECK_THROWS_AS(c.subset({"missing_entry"}), Error);
}

TEST_CASE("option matching rules") {
  std::vector<QAOption> options = {{"A", "4"}, {"B", "8"}, {"C", "15"}};
  CHECK(best_option_for_value("8", options, true) == 1);
  CHECK(best_option_for_value("8.3", options, true) == 1);  // within 0.5
  CHECK(best_option_for_value("100", options, true) == -1);

  std::vector<QAOption> labels = {{"A", "car"}, {"B", "pedestrian"}, {"D", "none"}};
  CHECK(best_option_for_value("car O1", labels, false) == 0);
  CHECK(best_option_for_value("none", labels, false) == 2);
  CHECK(best_option_for_value("bicycle", labels, false) == -1);

  CHECK(value_matches_option("6.32456", "6.3", true));
  CHECK(!value_matches_option("6.32456", "24", true));
  CHECK(value_matches_option("ego", "EGO", false));
  CHECK(!value_matches_option("adjacent", "ego", false));
}

TEST_CASE("parse_first_number") {
  CHECK(parse_first_number("8") == 8.0);
  CHECK(parse_first_number("about 6.5 meters") == 6.5);
  CHECK(parse_first_number("-3.25") == -3.25);
  CHECK(parse_first_number("none") == std::nullopt);
}
