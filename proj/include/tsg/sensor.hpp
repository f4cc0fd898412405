#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "tsg/geometry.hpp"
#include "tsg/world.hpp"

namespace tsg {

using Rng = std::mt19937_64;

/// Derives an independent stream for item `index` of a seeded run.
Rng substream(std::uint64_t seed, std::uint64_t index);

struct LidarConfig {
  double h_res = deg2rad(0.5);
  std::vector<double> rings = default_rings();
  double max_range = 30.0;
  double range_noise_sigma = 0.01;
  double sensor_height = 0.5;

  static std::vector<double> default_rings();
  int azimuth_count() const;
  void validate() const;
};

struct ScanPoint {
  Vec3 p;  // robot frame; z measured from the ground plane
  int ring = 0;
  int azimuth = 0;
};

struct Scan {
  std::vector<ScanPoint> points;  // ordered by (ring, azimuth)
  double sensor_height = 0.5;
};

/// Casts every (ring, azimuth) ray of the LiDAR from `pose`. Hits are the
/// nearest of obstacle faces (within their height extent) and GROUND floor
/// cells; VOID floor returns nothing.
Scan raycast(const Scenario& scenario, const Pose2& pose, const LidarConfig& cfg, Rng& rng);

struct OdometryNoise {
  double sigma_x = 0.02;
  double sigma_y = 0.02;
  double sigma_theta = 0.005;

  static OdometryNoise zero() { return {0.0, 0.0, 0.0}; }
};

/// Relative motion prev -> curr perturbed by zero-mean Gaussian noise per component.
Pose2 odometry(const Pose2& prev_gt, const Pose2& curr_gt, const OdometryNoise& noise, Rng& rng);

/// Writes `ring,azimuth,x,y,z` rows.
void write_scan_csv(std::ostream& out, const Scan& scan);

}  // namespace tsg
