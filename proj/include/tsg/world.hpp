#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsg/geometry.hpp"

namespace tsg {

enum class GroundKind : unsigned char { Ground, Void };

struct ObstacleSegment {
  Vec2 p0;
  Vec2 p1;
  double z_low = 0.0;
  double z_high = 3.0;

  double length() const { return (p1 - p0).norm(); }
};

inline constexpr double kWallHeight = 3.0;
inline constexpr double kRailHeight = 1.0;

/// Labelled axis-aligned rectangle carrying ground-truth annotations
/// (room footprints, walkway sides).
struct Region {
  std::string name;
  Vec2 min;
  Vec2 max;

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  Vec2 center() const { return 0.5 * (min + max); }
};

struct Scenario {
  std::string name;
  double cell_size = 0.2;
  double width = 0.0;
  double height = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<GroundKind> ground;  // row-major, row 0 at y = 0
  std::vector<ObstacleSegment> obstacles;
  std::vector<Pose2> trajectory;
  std::uint64_t rng_seed = 0;
  std::vector<Region> regions;

  /// Ground kind under a world point, or nullopt outside the extent.
  std::optional<GroundKind> ground_at(const Vec2& p) const;
  bool is_ground(const Vec2& p) const { return ground_at(p) == GroundKind::Ground; }
  GroundKind cell(int i, int j) const { return ground[static_cast<std::size_t>(j) * nx + i]; }

  /// First region whose name starts with `prefix` and contains p.
  const Region* region_at(const Vec2& p, std::string_view prefix = "") const;
  const Region* region(std::string_view name) const;

  /// Throws ValidationError when an invariant does not hold.
  void validate() const;
};

enum class CanonicalScenario { FourRooms, LongCorridor, OpenCorridor };

std::optional<CanonicalScenario> parse_canonical(std::string_view name);
std::string to_string(CanonicalScenario s);

Scenario build_canonical(CanonicalScenario which);

nlohmann::json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

/// Canonical name or a path to a scenario JSON file.
Scenario resolve_scenario(const std::string& name_or_path);

/// Minimum 2-D distance from p to any obstacle whose vertical extent intersects
/// [z_lo, z_hi]; +inf when none qualifies.
double nearest_obstacle_distance(const Scenario& s, const Vec2& p, std::pair<double, double> height_band);

}  // namespace tsg
