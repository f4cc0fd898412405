#include <doctest.h>

#include <random>

#include "tsg/errors.hpp"
#include "tsg/sensor.hpp"
#include "tsg/traversability.hpp"
#include "worlds.hpp"

using namespace tsg;

namespace {

// Sparse kernel written out independently of the library.
double kernel(double r, double rho) {
  if (r >= rho) return 0.0;
  const double x = r / rho;
  return ((2.0 + std::cos(2.0 * kPi * x)) * (1.0 - x)) / 3.0 + std::sin(2.0 * kPi * x) / (2.0 * kPi);
}

TravGrid grid_of(const std::map<CellIndex, double>& raw, double cell = 0.2) {
  TravGrid g;
  g.cell_size = cell;
  for (const auto& [idx, v] : raw) {
    TravCell c;
    c.raw = c.score = v;
    c.n_points = 5;
    c.normal_z = 1.0;
    c.observed_count = 1;
    g.cells[idx] = c;
  }
  return g;
}

ScanPoint at(double x, double y, double z) {
  ScanPoint p;
  p.p = Vec3(x, y, z);
  return p;
}

}  // namespace

TEST_CASE("kernel shape") {
  CHECK(bgk_kernel(0.0, 0.6) == doctest::Approx(1.0));
  CHECK(bgk_kernel(0.6, 0.6) == 0.0);
  CHECK(bgk_kernel(1.0, 0.6) == 0.0);
  double prev = 1.0;
  for (double r = 0.01; r < 0.6; r += 0.01) {
    const double k = bgk_kernel(r, 0.6);
    CHECK(k == doctest::Approx(kernel(r, 0.6)));
    CHECK(k <= prev + 1e-12);
    CHECK(k >= 0.0);
    prev = k;
  }
}

TEST_CASE("bgk_smooth against brute force") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  std::map<CellIndex, double> raw;
  for (int j = 0; j < 15; ++j)
    for (int i = 0; i < 15; ++i)
      if (u(rng) < 0.8) raw[{i, j}] = u(rng) < 0.7 ? 1.0 : 0.0;
  TravGrid g = grid_of(raw);
  const double rho = 0.6;
  bgk_smooth(g, rho);
  for (const auto& [idx, v] : raw) {
    double num = 0, den = 0;
    for (const auto& [jdx, w] : raw) {
      const double r = 0.2 * std::hypot(idx.i - jdx.i, idx.j - jdx.j);
      num += kernel(r, rho) * w;
      den += kernel(r, rho);
    }
    REQUIRE(g.cells.at(idx).score == doctest::Approx(num / den).epsilon(1e-12));
  }
}

TEST_CASE("bgk_smooth examples") {
  SUBCASE("uniform scores stay put") {
    std::map<CellIndex, double> raw;
    for (int j = 0; j < 6; ++j)
      for (int i = 0; i < 6; ++i) raw[{i, j}] = 1.0;
    TravGrid g = grid_of(raw);
    bgk_smooth(g, 0.6);
    for (const auto& [idx, c] : g.cells) CHECK(c.score == doctest::Approx(1.0));
  }
  SUBCASE("isolated raw-1 cell among raw-0 neighbors") {
    std::map<CellIndex, double> raw;
    for (int j = -3; j <= 3; ++j)
      for (int i = -3; i <= 3; ++i) raw[{i, j}] = (i == 0 && j == 0) ? 1.0 : 0.0;
    TravGrid g = grid_of(raw);
    const double rho = 0.6;
    bgk_smooth(g, rho);
    double den = 0.0;
    for (const auto& [idx, v] : raw) den += kernel(0.2 * std::hypot(idx.i, idx.j), rho);
    const double expect = kernel(0, rho) / den;
    CHECK(g.cells.at({0, 0}).score == doctest::Approx(expect));
    CHECK(expect < 0.5);
    CHECK_FALSE(is_traversable(g.cells.at({0, 0}), TravConfig{}));
  }
  SUBCASE("no neighbors in radius") {
    TravGrid g = grid_of({{{0, 0}, 1.0}, {{10, 10}, 0.0}});
    bgk_smooth(g, 0.6);
    CHECK(g.cells.at({0, 0}).score == 1.0);
    CHECK(g.cells.at({10, 10}).score == 0.0);
  }
}

TEST_CASE("global_update") {
  SUBCASE("running mean 1,1,1,0") {
    TravGrid global;
    for (double s : {1.0, 1.0, 1.0, 0.0}) global_update(global, grid_of({{{2, 3}, s}}));
    const TravCell& c = global.cells.at({2, 3});
    CHECK(c.score == doctest::Approx(0.75));
    CHECK(c.observed_count == 4);
    CHECK(is_traversable(c, TravConfig{}));
  }
  SUBCASE("same scan twice gives the same nodes") {
    LidarConfig lidar;
    Rng rng = substream(1, 0);
    const Scenario s = worlds::two_rooms(0.8);
    const Scan scan = raycast(s, Pose2(2.5, 2.5, 0), lidar, rng);
    TravGrid local = segment_ground(scan, Pose2(2.5, 2.5, 0), TravConfig{});
    bgk_smooth(local, 0.6);
    TravGrid once, twice;
    global_update(once, local);
    global_update(twice, local);
    global_update(twice, local);
    const auto a = extract_nodes(once, TravConfig{}), b = extract_nodes(twice, TravConfig{});
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].cell == b[k].cell);
    CHECK(!a.empty());
  }
  SUBCASE("empty result leaves the grid alone") {
    TravGrid g = grid_of({{{0, 0}, 1.0}});
    global_update(g, TravGrid{});
    CHECK(g.cells.size() == 1);
    CHECK(g.cells.at({0, 0}).observed_count == 1);
  }
  SUBCASE("cell size mismatch") {
    TravGrid g = grid_of({{{0, 0}, 1.0}}, 0.2);
    CHECK_THROWS_AS(global_update(g, grid_of({{{0, 0}, 1.0}}, 0.5)), ConfigError);
  }
}

TEST_CASE("segment_ground") {
  TravConfig cfg;
  SUBCASE("flat cells with enough points score 1") {
    Scan scan;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        for (int k = 0; k < 4; ++k) scan.points.push_back(at(0.05 + 0.2 * i + 0.1 * (k % 2), 0.05 + 0.2 * j + 0.1 * (k / 2), 0.0));
    const TravGrid g = segment_ground(scan, Pose2::identity(), cfg);
    CHECK(g.cells.size() == 25);
    for (const auto& [idx, c] : g.cells) CHECK(c.raw == 1.0);
  }
  SUBCASE("two points are an outlier") {
    Scan scan;
    scan.points = {at(0.05, 0.05, 0.0), at(0.1, 0.1, 0.0)};
    CHECK(segment_ground(scan, Pose2::identity(), cfg).cells.empty());
  }
  SUBCASE("step to a neighbor above s_max") {
    Scan scan;
    for (int k = 0; k < 4; ++k) {
      scan.points.push_back(at(0.05 + 0.1 * (k % 2), 0.05 + 0.1 * (k / 2), 0.0));
      scan.points.push_back(at(0.25 + 0.1 * (k % 2), 0.05 + 0.1 * (k / 2), 0.3));
    }
    const TravGrid g = segment_ground(scan, Pose2::identity(), cfg);
    REQUIRE(g.cells.size() == 2);
    for (const auto& [idx, c] : g.cells) CHECK(c.raw == 0.0);
  }
  SUBCASE("void floor leaves no cells") {
    Scenario s = build_canonical(CanonicalScenario::OpenCorridor);
    LidarConfig lidar;
    lidar.range_noise_sigma = 0.0;
    Rng rng = substream(1, 0);
    const Pose2 pose(5.0, 2.0, kPi / 2);  // looking across the hollow
    const TravGrid g = segment_ground(raycast(s, pose, lidar, rng), pose, cfg);
    for (const auto& [idx, c] : g.cells) {
      const Vec2 p = g.center_of(idx);
      CHECK_FALSE((p.x() > 1.2 && p.x() < 8.8 && p.y() > 3.2 && p.y() < 5.8));
    }
  }
}
