#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tsg/errors.hpp"
#include "tsg/sensor.hpp"
#include "tsg/world.hpp"
#include "worlds.hpp"

using namespace tsg;

TEST_CASE("canonical four_rooms") {
  const Scenario s = build_canonical(CanonicalScenario::FourRooms);
  int rooms = 0;
  for (const auto& r : s.regions) rooms += r.name.rfind("room:", 0) == 0;
  CHECK(rooms == 4);
  CHECK_NOTHROW(s.validate());
  // closed loop
  CHECK((s.trajectory.front().translation() - s.trajectory.back().translation()).norm() < 1e-12);
  // every doorway narrower than twice the default clearance
  const Vec2 door{5.0, 2.6};
  CHECK(nearest_obstacle_distance(s, door, {0.0, 3.0}) == doctest::Approx(0.4));
}

TEST_CASE("canonical long_corridor and open_corridor") {
  const Scenario lc = build_canonical(CanonicalScenario::LongCorridor);
  CHECK(nearest_obstacle_distance(lc, {5.0, 3.0}, {0.0, 3.0}) == doctest::Approx(1.0));   // 2 m leg
  CHECK(nearest_obstacle_distance(lc, {12.0, 3.0}, {0.0, 3.0}) == doctest::Approx(2.0));  // 4 m leg
  const Scenario oc = build_canonical(CanonicalScenario::OpenCorridor);
  int void_cells = 0;
  for (auto g : oc.ground) void_cells += g == GroundKind::Void;
  CHECK(void_cells > 0);
  // the hollow is fenced by rails only
  CHECK(nearest_obstacle_distance(oc, {5.0, 4.5}, {2.0, 3.0}) > 3.0);
  CHECK(nearest_obstacle_distance(oc, {5.0, 4.5}, {0.0, 1.0}) == doctest::Approx(1.5));
}

TEST_CASE("scenario files on disk match the builders") {
  for (const char* name : {"four_rooms", "long_corridor", "open_corridor"}) {
    const auto path = std::filesystem::path(TSG_SCENARIO_DIR) / (std::string(name) + ".json");
    const Scenario file = load_scenario(path);
    CHECK(scenario_to_json(file) == scenario_to_json(resolve_scenario(name)));
  }
}

TEST_CASE("scenario json round trip") {
  const Scenario s = build_canonical(CanonicalScenario::OpenCorridor);
  const auto j = scenario_to_json(s);
  CHECK(scenario_to_json(scenario_from_json(j)) == j);
}

TEST_CASE("waypoint on VOID is rejected") {
  Scenario s = build_canonical(CanonicalScenario::OpenCorridor);
  s.trajectory.push_back(Pose2(5.0, 4.5, 0.0));
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("malformed scenario json") {
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"name", "x"}}), SchemaError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/file.json"), Error);
}

TEST_CASE("nearest_obstacle_distance") {
  Scenario s = worlds::empty(10, 10);
  worlds::wall(s, {5, 0}, {5, 10});
  CHECK(nearest_obstacle_distance(s, {4, 5}, {0.0, 1.5}) == doctest::Approx(1.0));
  worlds::wall(s, {2, 0}, {2, 10});
  CHECK(nearest_obstacle_distance(s, {4, 5}, {0.0, 1.5}) == doctest::Approx(1.0));
  Scenario r = worlds::empty(10, 10);
  worlds::rail(r, {5, 0}, {5, 10});
  CHECK(std::isinf(nearest_obstacle_distance(r, {4, 5}, {2.0, 3.0})));
}

TEST_CASE("raycast examples") {
  LidarConfig cfg;
  cfg.range_noise_sigma = 0.0;
  Rng rng = substream(1, 0);

  SUBCASE("flat floor") {
    const Scenario s = worlds::empty(100, 100);
    const Scan scan = raycast(s, Pose2(50, 50, 0), cfg, rng);
    for (const auto& p : scan.points) {
      const double ring = cfg.rings[static_cast<std::size_t>(p.ring)];
      REQUIRE(ring < 0.0);
      const double range = std::hypot(p.p.x(), p.p.y(), p.p.z() - cfg.sensor_height);
      REQUIRE(range == doctest::Approx(cfg.sensor_height / std::sin(-ring)));
      REQUIRE(std::abs(p.p.z()) < 1e-9);
    }
  }
  SUBCASE("wall ahead") {
    Scenario s = worlds::empty(20, 20);
    worlds::wall(s, {12, 0}, {12, 20});
    const Scan scan = raycast(s, Pose2(10, 10, 0), cfg, rng);
    int on_wall = 0;
    for (const auto& p : scan.points)
      if (p.azimuth == 0 && p.p.z() > 0.05) {
        CHECK(p.p.x() == doctest::Approx(2.0));
        CHECK(std::abs(p.p.y()) < 1e-9);
        ++on_wall;
      }
    CHECK(on_wall >= 1);
  }
  SUBCASE("upper rings pass over a rail") {
    Scenario s = worlds::empty(20, 20);
    worlds::rail(s, {12, 0}, {12, 20});
    worlds::wall(s, {15, 0}, {15, 20});
    const Scan scan = raycast(s, Pose2(10, 10, 0), cfg, rng);
    bool behind = false;
    for (const auto& p : scan.points)
      if (p.azimuth == 0 && cfg.sensor_height + 2.0 * std::tan(cfg.rings[static_cast<std::size_t>(p.ring)]) > 1.0)
        behind = behind || std::abs(p.p.x() - 5.0) < 1e-6;
    CHECK(behind);
  }
  SUBCASE("void floor returns nothing") {
    Scenario s = worlds::empty(20, 20);
    for (auto& g : s.ground) g = GroundKind::Void;
    s.ground[0] = GroundKind::Ground;
    CHECK(raycast(s, Pose2(0.1, 0.1, 0), cfg, rng).points.empty());
  }
}

TEST_CASE("raycast off the map") {
  const Scenario s = worlds::empty(10, 10);
  Rng rng = substream(1, 0);
  CHECK_THROWS_AS(raycast(s, Pose2(-5, 5, 0), LidarConfig{}, rng), PoseOffMap);
}

TEST_CASE("odometry") {
  const Pose2 a(1, 2, 0.3), b(2, 2.5, 0.6);
  Rng rng = substream(3, 7);
  const Pose2 exact = odometry(a, b, OdometryNoise::zero(), rng);
  const Pose2 rel = compose(inverse(a), b);
  CHECK(exact.x == doctest::Approx(rel.x));
  CHECK(exact.y == doctest::Approx(rel.y));
  CHECK(exact.theta == doctest::Approx(rel.theta));
  const Pose2 still = odometry(a, a, OdometryNoise::zero(), rng);
  CHECK(still.x == 0.0);
  CHECK(still.theta == 0.0);

  Rng r1 = substream(9, 4), r2 = substream(9, 4);
  const Pose2 n1 = odometry(a, b, OdometryNoise{}, r1), n2 = odometry(a, b, OdometryNoise{}, r2);
  CHECK(n1.x == n2.x);
  CHECK(n1.theta == n2.theta);
  CHECK(n1.x != rel.x);
}

TEST_CASE("scan csv") {
  LidarConfig cfg;
  Rng rng = substream(1, 0);
  const Scan scan = raycast(worlds::empty(10, 10), Pose2(5, 5, 0), cfg, rng);
  std::ostringstream os;
  write_scan_csv(os, scan);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "ring,azimuth,x,y,z");
}
