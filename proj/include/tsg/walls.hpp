#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "tsg/geometry.hpp"
#include "tsg/sensor.hpp"

namespace tsg {

struct WallsConfig {
  double fit_tol = 0.05;
  int min_support = 10;
  double assoc_angle_deg = 10.0;
  double assoc_dist = 0.3;
  double assoc_gap = 1.0;
  std::pair<double, double> height_band{0.3, 2.5};
  /// A segment is a wall only if at least min_tall_columns of its columns
  /// have returns above this height; handrails (1.0 m) never do.
  double min_top_height = 1.05;
  int min_tall_columns = 2;
  double trim_floor = 1e-6;  // end points off the inner fit by more than max(this, 4 rms) are dropped
  double ring_range_tol = 0.1;  // max horizontal range spread across rings of one column
  double break_gap = 0.5;       // consecutive points farther apart start a new run

  void validate() const;
};

struct WallObservation {
  Line2 line;  // robot frame, canonical (d > 0: normal points from robot to wall)
  int support = 0;
  double s_min = 0.0;  // extent along line.tangent()
  double s_max = 0.0;
  double rms = 0.0;

  Vec2 endpoint_min() const { return line.d * line.normal() + s_min * line.tangent(); }
  Vec2 endpoint_max() const { return line.d * line.normal() + s_max * line.tangent(); }
};

struct WallLandmark {
  int id = 0;
  Line2 line;  // world frame, canonical; optimized
  Vec2 side;   // world normal pointing from the observed side toward the wall
  Vec2 end_a;  // observed extent (projected onto `line` on use)
  Vec2 end_b;
  std::vector<std::pair<int, WallObservation>> observations;  // (keyframe id, observation)

  /// `line` with its normal flipped to agree with `side`.
  Line2 oriented() const;
  /// Observed extent as an interval along oriented().tangent().
  std::pair<double, double> extent() const;
  std::pair<Vec2, Vec2> segment() const;
};

/// Vertical-surface filter, then split-and-merge over the azimuth ordering.
std::vector<WallObservation> extract_walls(const Scan& scan, const WallsConfig& cfg = {});

/// Best-matching landmark id for an observation taken from `pose`, or nullopt
/// for a new landmark.
std::optional<int> associate_wall(const WallObservation& obs, const Pose2& pose,
                                  const std::vector<WallLandmark>& landmarks, const WallsConfig& cfg = {});

/// World-frame oriented line of an observation made from `pose`.
Line2 observation_in_world(const WallObservation& obs, const Pose2& pose);

/// Creates a landmark from an observation.
WallLandmark make_landmark(int id, int keyframe, const WallObservation& obs, const Pose2& pose);

/// Records an associated observation and widens the landmark's extent.
void attach_observation(WallLandmark& lm, int keyframe, const WallObservation& obs, const Pose2& pose);

/// Distance from p to the landmark's observed segment.
double distance_to_segment(const WallLandmark& lm, const Vec2& p);

}  // namespace tsg
