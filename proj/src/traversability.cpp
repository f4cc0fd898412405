#include "tsg/traversability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "tsg/errors.hpp"

namespace tsg {

void TravConfig::validate() const {
  if (!(cell_size > 0.0)) throw ConfigError("trav.cell_size must be positive");
  if (tau < 0.0 || tau > 1.0) throw ConfigError("trav.tau must lie in [0, 1]");
  if (n_min < 1) throw ConfigError("trav.n_min must be at least 1");
  if (!(kernel_radius >= 0.0)) throw ConfigError("trav.kernel_radius must be non-negative");
}

CellIndex TravGrid::index_of(const Vec2& p) const {
  return {static_cast<int>(std::floor(p.x() / cell_size)), static_cast<int>(std::floor(p.y() / cell_size))};
}

Vec2 TravGrid::center_of(const CellIndex& c) const { return {(c.i + 0.5) * cell_size, (c.j + 0.5) * cell_size}; }

const TravCell* TravGrid::find(const CellIndex& c) const {
  auto it = cells.find(c);
  return it == cells.end() ? nullptr : &it->second;
}

double bgk_kernel(double r, double rho) {
  if (r >= rho) return 0.0;
  const double a = 2.0 * kPi * r / rho;
  return (2.0 + std::cos(a)) * (1.0 - r / rho) / 3.0 + std::sin(a) / (2.0 * kPi);
}

TravGrid segment_ground(const Scan& scan, const Pose2& pose, const TravConfig& cfg) {
  TravGrid grid;
  grid.cell_size = cfg.cell_size;
  if (scan.points.empty()) return grid;

  std::map<CellIndex, std::vector<Vec3>> bins;
  for (const auto& sp : scan.points) {
    const Vec2 w = pose.transform(sp.p.head<2>());
    bins[grid.index_of(w)].emplace_back(w.x(), w.y(), sp.p.z());
  }

  for (auto& [idx, pts] : bins) {
    double zmin = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) zmin = std::min(zmin, p.z());
    std::vector<Vec3> ground;
    for (const auto& p : pts)
      if (p.z() - zmin <= cfg.delta_g) ground.push_back(p);
    if (static_cast<int>(ground.size()) < cfg.n_min) continue;  // outlier cell

    Vec3 mean = Vec3::Zero();
    for (const auto& p : ground) mean += p;
    mean /= static_cast<double>(ground.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : ground) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Vec3 normal = eig.eigenvectors().col(0);

    TravCell cell;
    cell.z_mean = mean.z();
    cell.normal_z = std::abs(normal.z());
    cell.n_points = static_cast<int>(ground.size());
    cell.observed_count = 1;
    grid.cells.emplace(idx, cell);
  }

  const double cos_phi = std::cos(deg2rad(cfg.phi_max_deg));
  for (auto& [idx, cell] : grid.cells) {
    double max_step = 0.0;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0) continue;
        if (const TravCell* nb = grid.find({idx.i + di, idx.j + dj}))
          max_step = std::max(max_step, std::abs(nb->z_mean - cell.z_mean));
      }
    cell.raw = (cell.normal_z >= cos_phi && max_step <= cfg.s_max) ? 1.0 : 0.0;
    cell.score = cell.raw;
  }
  return grid;
}

void bgk_smooth(TravGrid& grid, double kernel_radius) {
  if (kernel_radius <= 0.0) return;
  const int reach = static_cast<int>(std::ceil(kernel_radius / grid.cell_size));
  std::map<CellIndex, double> smoothed;
  for (const auto& [idx, cell] : grid.cells) {
    double num = 0.0;
    double den = 0.0;
    for (int dj = -reach; dj <= reach; ++dj)
      for (int di = -reach; di <= reach; ++di) {
        const TravCell* nb = grid.find({idx.i + di, idx.j + dj});
        if (!nb) continue;
        const double r = grid.cell_size * std::hypot(di, dj);
        const double k = bgk_kernel(r, kernel_radius);
        num += k * nb->raw;
        den += k;
      }
    smoothed[idx] = den > 0.0 ? num / den : cell.raw;
  }
  for (auto& [idx, cell] : grid.cells) cell.score = std::clamp(smoothed[idx], 0.0, 1.0);
}

void global_update(TravGrid& global, const TravGrid& scan_result) {
  if (global.cell_size != scan_result.cell_size) throw ConfigError("traversability grids differ in cell size");
  for (const auto& [idx, obs] : scan_result.cells) {
    auto [it, inserted] = global.cells.try_emplace(idx, obs);
    if (inserted) {
      it->second.observed_count = 1;
      continue;
    }
    TravCell& g = it->second;
    const double n = g.observed_count;
    const double w = 1.0 / (n + 1.0);
    g.z_mean = (g.z_mean * n + obs.z_mean) * w;
    g.normal_z = (g.normal_z * n + obs.normal_z) * w;
    g.raw = (g.raw * n + obs.raw) * w;
    g.score = (g.score * n + obs.score) * w;
    g.n_points += obs.n_points;
    g.observed_count += 1;
  }
}

bool is_traversable(const TravCell& c, const TravConfig& cfg) {
  return c.score >= cfg.tau && c.n_points >= cfg.n_min && c.normal_z >= std::cos(deg2rad(cfg.phi_max_deg));
}

std::vector<TravNode> extract_nodes(const TravGrid& grid, const TravConfig& cfg) {
  std::vector<TravNode> nodes;
  for (const auto& [idx, cell] : grid.cells)
    if (is_traversable(cell, cfg)) nodes.push_back({grid.center_of(idx), idx});
  return nodes;
}

}  // namespace tsg
