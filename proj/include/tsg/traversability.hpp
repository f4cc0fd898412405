#pragma once

#include <compare>
#include <map>
#include <vector>

#include "tsg/geometry.hpp"
#include "tsg/sensor.hpp"

namespace tsg {

struct CellIndex {
  int i = 0;
  int j = 0;
  auto operator<=>(const CellIndex&) const = default;
};

struct TravConfig {
  double cell_size = 0.2;
  double tau = 0.5;            // traversability score threshold
  double phi_max_deg = 30.0;   // max tilt of the fitted plane normal
  double s_max = 0.15;         // max |dz| step to an 8-neighbor
  int n_min = 3;               // min ground candidates per cell
  double kernel_radius = 0.6;  // BGK support
  double delta_g = 0.15;       // ground-candidate band above the cell minimum

  void validate() const;
};

struct TravCell {
  double z_mean = 0.0;
  double normal_z = 0.0;
  double raw = 0.0;
  double score = 0.0;
  int n_points = 0;
  int observed_count = 0;
};

struct TravGrid {
  double cell_size = 0.2;
  std::map<CellIndex, TravCell> cells;

  CellIndex index_of(const Vec2& p) const;
  Vec2 center_of(const CellIndex& c) const;
  const TravCell* find(const CellIndex& c) const;
};

struct TravNode {
  Vec2 center;
  CellIndex cell;
};

/// Sparse BGK kernel value for distance r and support rho (zero for r >= rho).
double bgk_kernel(double r, double rho);

/// Bins a scan into world-frame cells, keeps points within delta_g of each
/// cell's minimum height, rejects cells with fewer than n_min candidates, and
/// assigns a raw 0/1 score from plane tilt and neighbor step height.
TravGrid segment_ground(const Scan& scan, const Pose2& pose, const TravConfig& cfg);

/// Replaces every score with the kernel-weighted mean of raw scores within
/// kernel_radius.
void bgk_smooth(TravGrid& grid, double kernel_radius);

/// Folds a per-scan result into the global grid as an observation-count
/// weighted running mean. Throws ConfigError on cell-size mismatch.
void global_update(TravGrid& global, const TravGrid& scan_result);

bool is_traversable(const TravCell& c, const TravConfig& cfg);

/// Traversable cells as graph nodes, sorted by cell index.
std::vector<TravNode> extract_nodes(const TravGrid& grid, const TravConfig& cfg);

}  // namespace tsg
