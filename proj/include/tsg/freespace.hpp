#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsg/geometry.hpp"
#include "tsg/sensor.hpp"
#include "tsg/traversability.hpp"

namespace tsg {

enum class ClusterBackend { Traversability, Esdf };

struct ClusterConfig {
  double lambda_th = 0.45;
  double voxel_size = 0.2;
  std::pair<double, double> esdf_height_band{0.1, 2.0};
  /// World heights whose returns count as occupied for the node graph
  /// (above ground clutter, up to the robot traversal clearance).
  std::pair<double, double> occupied_band{0.1, 1.5};
  double width_radius = 2.0;  // nodes near the robot used for the width indicator
  double axis_radius = 3.0;   // nodes near the robot used for the axis indicator
  ClusterBackend backend = ClusterBackend::Traversability;

  void validate() const;
};

/// Sensed obstacle points projected to 2-D, bucketed on a uniform grid.
/// Distances within the searched buckets are exact.
class OccupiedSet {
 public:
  explicit OccupiedSet(double bucket_size = 0.2, double dedupe_resolution = 0.01);

  void insert(const Vec2& p);
  /// Adds the scan returns whose world height lies in (band.first, band.second].
  void insert_scan(const Scan& scan, const Pose2& pose, std::pair<double, double> band);

  /// Nearest stored point within `radius` of p.
  std::optional<Vec2> nearest(const Vec2& p, double radius) const;
  bool any_within(const Vec2& p, double radius) const;

  std::size_t size() const { return count_; }
  std::vector<Vec2> points() const;

 private:
  static std::int64_t key(int i, int j) { return (static_cast<std::int64_t>(i) << 32) ^ static_cast<std::uint32_t>(j); }

  double bucket_;
  double dedupe_;
  std::size_t count_ = 0;
  std::unordered_map<std::int64_t, std::vector<Vec2>> buckets_;
  std::unordered_set<std::int64_t> seen_;
};

struct FreeSpaceCluster {
  int id = 0;
  std::vector<Vec2> nodes;
  Vec2 centroid = Vec2::Zero();
  double principal_axis = 0.0;
  std::vector<std::pair<double, double>> width_profile;  // (arc length, width)

  /// Recomputes centroid, principal axis, and width profile from `nodes`.
  void finalize(double cell_size);
};

/// 8-connected node graph over traversable cells; every edge with an endpoint
/// closer than lambda_th to an occupied point is removed. Returns the
/// component holding the robot's cell.
FreeSpaceCluster cluster_traversable(const TravGrid& grid, const TravConfig& trav_cfg, const OccupiedSet& occupied,
                                     const ClusterConfig& cfg, const Pose2& robot);

/// Node-graph variant over an explicit node list (the grid is only used for
/// cell indexing).
FreeSpaceCluster cluster_nodes(const std::vector<TravNode>& nodes, double cell_size, const OccupiedSet& occupied,
                               const ClusterConfig& cfg, const Pose2& robot);

/// Dense voxel occupancy over a height band, built by carving sensor rays.
class VoxelMap {
 public:
  VoxelMap(const Vec2& xy_min, const Vec2& xy_max, double voxel_size, std::pair<double, double> band);

  void integrate(const Scan& scan, const Pose2& pose);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  double voxel_size() const { return vs_; }
  std::size_t flat(int i, int j, int k) const { return (static_cast<std::size_t>(k) * ny_ + j) * nx_ + i; }
  bool occupied(int i, int j, int k) const { return hits_[flat(i, j, k)] > 0; }
  bool free(int i, int j, int k) const { return hits_[flat(i, j, k)] == 0 && passes_[flat(i, j, k)] > 0; }
  std::optional<std::array<int, 3>> index_of(const Vec3& p) const;
  Vec3 center_of(int i, int j, int k) const;

  /// Exact Euclidean distance (meters) from every voxel center to the nearest
  /// occupied voxel center; +inf when there is none.
  std::vector<double> esdf() const;

 private:
  Vec2 origin_;
  double vs_;
  std::pair<double, double> band_;
  int nx_, ny_, nz_;
  std::vector<std::uint32_t> hits_;
  std::vector<std::uint32_t> passes_;
};

/// ESDF baseline: free voxels with clearance >= lambda_th, 26-connected,
/// component holding the sensor origin, projected to 2-D cell centers.
FreeSpaceCluster cluster_esdf_baseline(const VoxelMap& map, const ClusterConfig& cfg, const Pose2& robot,
                                       double sensor_height);

struct WidthAxis {
  double width = 0.0;
  double axis = 0.0;
};

/// Aisle indicators near the robot: principal axis of nearby node positions in
/// [0, pi) (ties broken toward 0) and the median perpendicular free width.
WidthAxis width_and_axis(const FreeSpaceCluster& cluster, const OccupiedSet& occupied, const ClusterConfig& cfg,
                         const Pose2& robot);

/// Principal direction of a point set in [0, pi); equal eigenvalues give 0.
double principal_axis(const std::vector<Vec2>& pts);

nlohmann::json clusters_to_json(const std::vector<FreeSpaceCluster>& clusters);

}  // namespace tsg
