#include "tsg/freespace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include <Eigen/Eigenvalues>

#include "tsg/errors.hpp"

namespace tsg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-dimensional squared distance transform of a sampled function
// (lower envelope of parabolas).
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

void ClusterConfig::validate() const {
  if (!(lambda_th > 0.0)) throw ConfigError("cluster.lambda_th must be positive");
  if (!(voxel_size > 0.0)) throw ConfigError("cluster.voxel_size must be positive");
  if (!(esdf_height_band.first < esdf_height_band.second)) throw ConfigError("ESDF height band is empty");
}

// ---------------------------------------------------------------- OccupiedSet

OccupiedSet::OccupiedSet(double bucket_size, double dedupe_resolution) : bucket_(bucket_size), dedupe_(dedupe_resolution) {}

void OccupiedSet::insert(const Vec2& p) {
  const auto di = static_cast<int>(std::floor(p.x() / dedupe_));
  const auto dj = static_cast<int>(std::floor(p.y() / dedupe_));
  if (!seen_.insert(key(di, dj)).second) return;
  const auto bi = static_cast<int>(std::floor(p.x() / bucket_));
  const auto bj = static_cast<int>(std::floor(p.y() / bucket_));
  buckets_[key(bi, bj)].push_back(p);
  ++count_;
}

void OccupiedSet::insert_scan(const Scan& scan, const Pose2& pose, std::pair<double, double> band) {
  for (const auto& sp : scan.points) {
    const double z = sp.p.z();
    if (z > band.first && z <= band.second) insert(pose.transform(sp.p.head<2>()));
  }
}

std::optional<Vec2> OccupiedSet::nearest(const Vec2& p, double radius) const {
  const int reach = static_cast<int>(std::ceil(radius / bucket_));
  const auto bi = static_cast<int>(std::floor(p.x() / bucket_));
  const auto bj = static_cast<int>(std::floor(p.y() / bucket_));
  std::optional<Vec2> best;
  double best_d2 = radius * radius;
  for (int j = bj - reach; j <= bj + reach; ++j)
    for (int i = bi - reach; i <= bi + reach; ++i) {
      auto it = buckets_.find(key(i, j));
      if (it == buckets_.end()) continue;
      for (const auto& q : it->second) {
        const double d2 = (q - p).squaredNorm();
        if (d2 < best_d2 || (!best && d2 <= best_d2)) {
          best_d2 = d2;
          best = q;
        }
      }
    }
  return best;
}

bool OccupiedSet::any_within(const Vec2& p, double radius) const {
  const int reach = static_cast<int>(std::ceil(radius / bucket_));
  const auto bi = static_cast<int>(std::floor(p.x() / bucket_));
  const auto bj = static_cast<int>(std::floor(p.y() / bucket_));
  const double r2 = radius * radius;
  for (int j = bj - reach; j <= bj + reach; ++j)
    for (int i = bi - reach; i <= bi + reach; ++i) {
      auto it = buckets_.find(key(i, j));
      if (it == buckets_.end()) continue;
      for (const auto& q : it->second)
        if ((q - p).squaredNorm() < r2) return true;
    }
  return false;
}

std::vector<Vec2> OccupiedSet::points() const {
  std::vector<Vec2> out;
  out.reserve(count_);
  for (const auto& [k, pts] : buckets_) out.insert(out.end(), pts.begin(), pts.end());
  std::sort(out.begin(), out.end(), [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  return out;
}

// ----------------------------------------------------------- FreeSpaceCluster

double principal_axis(const std::vector<Vec2>& pts) {
  if (pts.size() < 2) return 0.0;
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(1);
  if (hi - lo <= 1e-9 * std::max(1.0, hi)) return 0.0;
  const Vec2 v = eig.eigenvectors().col(1);
  const double axis = wrap_axis(std::atan2(v.y(), v.x()));
  // Snap values that are numerically pi back to 0.
  return (kPi - axis < 1e-12) ? 0.0 : axis;
}

void FreeSpaceCluster::finalize(double cell_size) {
  centroid = Vec2::Zero();
  for (const auto& p : nodes) centroid += p;
  if (!nodes.empty()) centroid /= static_cast<double>(nodes.size());
  principal_axis = tsg::principal_axis(nodes);

  width_profile.clear();
  if (nodes.empty()) return;
  const Vec2 u{std::cos(principal_axis), std::sin(principal_axis)};
  const Vec2 v{-u.y(), u.x()};
  std::map<int, std::pair<double, double>> bins;
  const double bin = 0.5;
  double s_min = kInf;
  for (const auto& p : nodes) s_min = std::min(s_min, (p - centroid).dot(u));
  for (const auto& p : nodes) {
    const int b = static_cast<int>(std::floor(((p - centroid).dot(u) - s_min) / bin));
    const double t = (p - centroid).dot(v);
    auto [it, inserted] = bins.try_emplace(b, t, t);
    if (!inserted) {
      it->second.first = std::min(it->second.first, t);
      it->second.second = std::max(it->second.second, t);
    }
  }
  for (const auto& [b, range] : bins) width_profile.emplace_back((b + 0.5) * bin, range.second - range.first + cell_size);
}

// --------------------------------------------------------- node-graph backend

FreeSpaceCluster cluster_nodes(const std::vector<TravNode>& nodes, double cell_size, const OccupiedSet& occupied,
                               const ClusterConfig& cfg, const Pose2& robot) {
  cfg.validate();
  std::map<CellIndex, std::size_t> lookup;
  for (std::size_t k = 0; k < nodes.size(); ++k) lookup.emplace(nodes[k].cell, k);

  const CellIndex robot_cell{static_cast<int>(std::floor(robot.x / cell_size)), static_cast<int>(std::floor(robot.y / cell_size))};
  auto start = lookup.find(robot_cell);
  if (start == lookup.end()) throw RobotNotOnNode("robot cell is not a traversable node");

  std::vector<char> near(nodes.size(), 0);
  for (std::size_t k = 0; k < nodes.size(); ++k) near[k] = occupied.any_within(nodes[k].center, cfg.lambda_th) ? 1 : 0;

  FreeSpaceCluster cluster;
  std::vector<char> visited(nodes.size(), 0);
  std::deque<std::size_t> queue{start->second};
  visited[start->second] = 1;
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    cluster.nodes.push_back(nodes[k].center);
    if (near[k]) continue;  // every edge of a near-obstacle node is removed
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0) continue;
        auto it = lookup.find({nodes[k].cell.i + di, nodes[k].cell.j + dj});
        if (it == lookup.end() || visited[it->second] || near[it->second]) continue;
        visited[it->second] = 1;
        queue.push_back(it->second);
      }
  }
  std::sort(cluster.nodes.begin(), cluster.nodes.end(),
            [](const Vec2& a, const Vec2& b) { return a.y() < b.y() || (a.y() == b.y() && a.x() < b.x()); });
  cluster.finalize(cell_size);
  return cluster;
}

FreeSpaceCluster cluster_traversable(const TravGrid& grid, const TravConfig& trav_cfg, const OccupiedSet& occupied,
                                     const ClusterConfig& cfg, const Pose2& robot) {
  const auto nodes = extract_nodes(grid, trav_cfg);
  if (nodes.empty()) throw RobotNotOnNode("traversability grid has no nodes");
  return cluster_nodes(nodes, grid.cell_size, occupied, cfg, robot);
}

// ------------------------------------------------------------------- VoxelMap

VoxelMap::VoxelMap(const Vec2& xy_min, const Vec2& xy_max, double voxel_size, std::pair<double, double> band)
    : vs_(voxel_size), band_(band) {
  origin_ = {std::floor(xy_min.x() / vs_) * vs_, std::floor(xy_min.y() / vs_) * vs_};
  nx_ = static_cast<int>(std::ceil((xy_max.x() - origin_.x()) / vs_));
  ny_ = static_cast<int>(std::ceil((xy_max.y() - origin_.y()) / vs_));
  nz_ = static_cast<int>(std::ceil((band.second - band.first) / vs_ - 1e-9));
  hits_.assign(static_cast<std::size_t>(nx_) * ny_ * nz_, 0);
  passes_.assign(hits_.size(), 0);
}

std::optional<std::array<int, 3>> VoxelMap::index_of(const Vec3& p) const {
  if (p.z() < band_.first || p.z() > band_.second) return std::nullopt;
  const int i = static_cast<int>(std::floor((p.x() - origin_.x()) / vs_));
  const int j = static_cast<int>(std::floor((p.y() - origin_.y()) / vs_));
  const int k = std::min(nz_ - 1, static_cast<int>(std::floor((p.z() - band_.first) / vs_)));
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return std::nullopt;
  return std::array<int, 3>{i, j, k};
}

Vec3 VoxelMap::center_of(int i, int j, int k) const {
  return {origin_.x() + (i + 0.5) * vs_, origin_.y() + (j + 0.5) * vs_, band_.first + (k + 0.5) * vs_};
}

void VoxelMap::integrate(const Scan& scan, const Pose2& pose) {
  const Vec3 origin{pose.x, pose.y, scan.sensor_height};
  const double step = vs_ / 3.0;
  for (const auto& sp : scan.points) {
    const Vec2 w = pose.transform(sp.p.head<2>());
    const Vec3 end{w.x(), w.y(), sp.p.z()};
    const auto end_idx = index_of(end);
    if (end_idx) ++hits_[flat((*end_idx)[0], (*end_idx)[1], (*end_idx)[2])];

    // Clip the ray to the height band before carving.
    const Vec3 dir = end - origin;
    double s0 = 0.0;
    double s1 = 1.0;
    if (std::abs(dir.z()) > 1e-12) {
      double a = (band_.first - origin.z()) / dir.z();
      double b = (band_.second - origin.z()) / dir.z();
      if (a > b) std::swap(a, b);
      s0 = std::max(s0, a);
      s1 = std::min(s1, b);
    } else if (origin.z() < band_.first || origin.z() > band_.second) {
      continue;
    }
    if (s0 >= s1) continue;
    const double len = dir.norm();
    const int samples = static_cast<int>(std::ceil((s1 - s0) * len / step));
    std::size_t last = std::numeric_limits<std::size_t>::max();
    const std::size_t end_flat = end_idx ? flat((*end_idx)[0], (*end_idx)[1], (*end_idx)[2]) : last;
    for (int n = 0; n <= samples; ++n) {
      const double s = std::min(s1, s0 + n * step / len);
      const auto idx = index_of(origin + s * dir);
      if (!idx) continue;
      const std::size_t f = flat((*idx)[0], (*idx)[1], (*idx)[2]);
      if (f == end_flat) break;
      if (f != last) {
        ++passes_[f];
        last = f;
      }
    }
  }
}

std::vector<double> VoxelMap::esdf() const {
  const std::size_t total = hits_.size();
  std::vector<double> g(total);
  for (std::size_t n = 0; n < total; ++n) g[n] = hits_[n] > 0 ? 0.0 : kInf;

  std::vector<int> v;
  std::vector<double> z;
  const int longest = std::max({nx_, ny_, nz_});
  std::vector<double> f(static_cast<std::size_t>(longest));
  std::vector<double> d(static_cast<std::size_t>(longest));

  auto pass = [&](int n, auto&& at) {
    for (int q = 0; q < n; ++q) f[q] = g[at(q)];
    edt_1d(f.data(), d.data(), n, v, z);
    for (int q = 0; q < n; ++q) g[at(q)] = d[q];
  };
  for (int k = 0; k < nz_; ++k)
    for (int j = 0; j < ny_; ++j) pass(nx_, [&](int q) { return flat(q, j, k); });
  for (int k = 0; k < nz_; ++k)
    for (int i = 0; i < nx_; ++i) pass(ny_, [&](int q) { return flat(i, q, k); });
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i) pass(nz_, [&](int q) { return flat(i, j, q); });

  for (auto& x : g) x = std::isfinite(x) ? std::sqrt(x) * vs_ : kInf;
  return g;
}

FreeSpaceCluster cluster_esdf_baseline(const VoxelMap& map, const ClusterConfig& cfg, const Pose2& robot,
                                       double sensor_height) {
  cfg.validate();
  const auto dist = map.esdf();
  auto keep = [&](int i, int j, int k) { return map.free(i, j, k) && dist[map.flat(i, j, k)] >= cfg.lambda_th; };

  const auto start = map.index_of({robot.x, robot.y, sensor_height});
  if (!start || !keep((*start)[0], (*start)[1], (*start)[2]))
    throw RobotNotInFreeSpace("sensor origin voxel is not in thresholded free space");

  std::vector<char> visited(dist.size(), 0);
  std::deque<std::array<int, 3>> queue{*start};
  visited[map.flat((*start)[0], (*start)[1], (*start)[2])] = 1;
  std::map<std::pair<int, int>, Vec2> columns;
  while (!queue.empty()) {
    const auto [i, j, k] = queue.front();
    queue.pop_front();
    const Vec3 c = map.center_of(i, j, k);
    columns.try_emplace({j, i}, c.head<2>());
    for (int dk = -1; dk <= 1; ++dk)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int a = i + di, b = j + dj, e = k + dk;
          if (a < 0 || b < 0 || e < 0 || a >= map.nx() || b >= map.ny() || e >= map.nz()) continue;
          const std::size_t f = map.flat(a, b, e);
          if (visited[f] || !keep(a, b, e)) continue;
          visited[f] = 1;
          queue.push_back({a, b, e});
        }
  }
  FreeSpaceCluster cluster;
  for (const auto& [key, p] : columns) cluster.nodes.push_back(p);
  cluster.finalize(map.voxel_size());
  return cluster;
}

// ------------------------------------------------------------ width and axis

namespace {

// Distance along `dir` from p to the first occupied point lying within half a
// bucket of the ray, or nullopt within max_dist.
std::optional<double> march(const OccupiedSet& occ, const Vec2& p, const Vec2& dir, double step, double radius,
                            double max_dist) {
  for (double t = 0.0; t <= max_dist; t += step) {
    if (auto q = occ.nearest(p + t * dir, radius)) {
      const double along = (*q - p).dot(dir);
      if (along > 0.0) return along;
    }
  }
  return std::nullopt;
}

}  // namespace

WidthAxis width_and_axis(const FreeSpaceCluster& cluster, const OccupiedSet& occupied, const ClusterConfig& cfg,
                         const Pose2& robot) {
  if (cluster.nodes.size() < 3) throw DegenerateCluster("cluster has fewer than 3 nodes");
  const Vec2 r = robot.translation();

  std::vector<Vec2> local;
  for (const auto& p : cluster.nodes)
    if ((p - r).norm() <= cfg.axis_radius) local.push_back(p);
  if (local.size() < 3) local = cluster.nodes;
  WidthAxis out;
  out.axis = principal_axis(local);

  const Vec2 perp{-std::sin(out.axis), std::cos(out.axis)};
  const double step = cfg.voxel_size / 2.0;
  const double radius = cfg.voxel_size / 2.0;
  std::vector<Vec2> samples;
  for (const auto& p : cluster.nodes)
    if ((p - r).norm() <= cfg.width_radius) samples.push_back(p);
  // Bounded work per keyframe: a deterministic stride over the nearby nodes.
  const std::size_t stride = std::max<std::size_t>(1, samples.size() / 48);
  std::vector<double> widths;
  for (std::size_t n = 0; n < samples.size(); n += stride) {
    const Vec2& p = samples[n];
    const auto left = march(occupied, p, perp, step, radius, 10.0);
    const auto right = march(occupied, p, -perp, step, radius, 10.0);
    if (left && right) widths.push_back(*left + *right);
  }
  if (widths.empty()) throw DegenerateCluster("no bounded width samples near the robot");
  const auto mid = widths.begin() + static_cast<std::ptrdiff_t>(widths.size() / 2);
  std::nth_element(widths.begin(), mid, widths.end());
  out.width = *mid;
  return out;
}

nlohmann::json clusters_to_json(const std::vector<FreeSpaceCluster>& clusters) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : clusters) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& p : c.nodes) nodes.push_back({p.x(), p.y()});
    out.push_back({{"id", c.id}, {"nodes", nodes}});
  }
  return out;
}

}  // namespace tsg
