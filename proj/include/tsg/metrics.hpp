#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsg/geometry.hpp"
#include "tsg/rooms.hpp"

namespace tsg {

std::vector<Vec2> rectangle_corners(const RoomFootprint& r);

/// Area of a convex polygon (counter-clockwise or clockwise).
double polygon_area(const std::vector<Vec2>& poly);

/// Exact overlap area of two oriented rectangles (convex clipping).
double intersection_area(const RoomFootprint& a, const RoomFootprint& b);

/// Dice coefficient 2|A n B| / (|A| + |B|).
double dcs(const RoomFootprint& a, const RoomFootprint& b);
double dcs(const Room& a, const Room& b);

struct MatchedPair {
  std::size_t first;
  std::size_t second;
  double dcs;
  double center_distance;
};

struct MatchResult {
  int n_re = 0;
  std::vector<MatchedPair> pairs;  // in matching order, highest overlap first
  double dcs_mean = 0.0;
  double dcs_best = 0.0;
  std::optional<double> d_center;  // center distance of the most-overlapped pair
};

/// Greedy maximum-overlap matching. When `gate` is given, a pair must also
/// pass rooms_compatible.
MatchResult match_traverses(const std::vector<Room>& first, const std::vector<Room>& second,
                            const RoomsConfig* gate = nullptr);

double f_re(double n_re, double n_first);

struct MetricsReport {
  double n_first = 0.0;
  double n_second = 0.0;
  double n_re = 0.0;
  double f_re = 0.0;
  double dcs = 0.0;  // mean over matched pairs
  double dcs_best = 0.0;
  std::optional<double> d_center;
  double ate = 0.0;
  double ate_dead_reckoning = 0.0;
  double ate_rmse = 0.0;
  double t_pgo_total = 0.0;
  double t_pgo_mean = 0.0;
  int runs = 1;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

struct RunArtifacts {
  std::vector<Room> rooms_first;
  std::vector<Room> rooms_second;
  std::vector<Pose2> ground_truth;  // keyframe poses, both traverses
  std::vector<Pose2> estimated;
  std::vector<Pose2> dead_reckoning;
  std::vector<double> pgo_times;
};

/// Distance between the first and last translations of a trajectory.
double start_end_ate(const std::vector<Pose2>& traj);

double translation_rmse(const std::vector<Pose2>& est, const std::vector<Pose2>& gt);

/// Throws OpenTrajectory when the ground truth does not return to its start.
MetricsReport compute_metrics(const RunArtifacts& run, const RoomsConfig* gate = nullptr);

/// Arithmetic mean of every field (d_center over the runs that have one).
MetricsReport average(const std::vector<MetricsReport>& runs);

}  // namespace tsg
