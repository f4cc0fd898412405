#include "tsg/walls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Eigenvalues>

#include "tsg/errors.hpp"

namespace tsg {

namespace {

struct LineFit {
  Line2 line;
  double rms = 0.0;
  double max_dev = 0.0;
};

LineFit fit_line(const std::vector<Vec2>& pts, std::size_t lo, std::size_t hi) {
  Vec2 mean = Vec2::Zero();
  const auto n = static_cast<double>(hi - lo + 1);
  for (std::size_t k = lo; k <= hi; ++k) mean += pts[k];
  mean /= n;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t k = lo; k <= hi; ++k) cov += (pts[k] - mean) * (pts[k] - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Vec2 normal = eig.eigenvectors().col(0);
  LineFit fit;
  fit.line = canonicalize({std::atan2(normal.y(), normal.x()), normal.dot(mean)});
  double ss = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const double e = fit.line.signed_distance(pts[k]);
    ss += e * e;
    fit.max_dev = std::max(fit.max_dev, std::abs(e));
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

void split(const std::vector<Vec2>& pts, std::size_t lo, std::size_t hi, double tol,
           std::vector<std::pair<std::size_t, std::size_t>>& out) {
  if (hi - lo < 2) {
    out.emplace_back(lo, hi);
    return;
  }
  const Vec2 a = pts[lo];
  const Vec2 b = pts[hi];
  const Vec2 dir = (b - a).normalized();
  const Vec2 n{-dir.y(), dir.x()};
  double worst = 0.0;
  std::size_t at = lo;
  for (std::size_t k = lo + 1; k < hi; ++k) {
    const double dev = std::abs((pts[k] - a).dot(n));
    if (dev > worst) {
      worst = dev;
      at = k;
    }
  }
  if (worst <= tol) {
    out.emplace_back(lo, hi);
    return;
  }
  split(pts, lo, at, tol, out);
  split(pts, at, hi, tol, out);
}

struct Column {
  Vec2 p;
  double top;
};

// One 2-D point per azimuth column seen by >= 2 rings at the
// same horizontal range. Among several such groups the tallest wins, so a
// wall seen over a rail beats the rail.
std::vector<Column> vertical_columns(const Scan& scan, const WallsConfig& cfg) {
  std::map<int, std::vector<const ScanPoint*>> columns;
  for (const auto& sp : scan.points) {
    const double z = sp.p.z();
    if (z >= cfg.height_band.first && z <= cfg.height_band.second) columns[sp.azimuth].push_back(&sp);
  }
  std::vector<Column> out;
  for (auto& [az, pts] : columns) {
    if (pts.size() < 2) continue;
    std::sort(pts.begin(), pts.end(), [](const ScanPoint* a, const ScanPoint* b) {
      return a->p.head<2>().norm() < b->p.head<2>().norm();
    });
    std::size_t best_lo = 0, best_hi = 0, best_n = 0;
    double best_top = -std::numeric_limits<double>::infinity();
    for (std::size_t lo = 0, hi = 0; lo < pts.size(); ++lo) {
      hi = std::max(hi, lo);
      while (hi + 1 < pts.size() && pts[hi + 1]->p.head<2>().norm() - pts[lo]->p.head<2>().norm() <= cfg.ring_range_tol) ++hi;
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = lo; k <= hi; ++k) top = std::max(top, pts[k]->p.z());
      const std::size_t n = hi - lo + 1;
      if (n >= 2 && (top > best_top || (top == best_top && n > best_n))) {
        best_top = top;
        best_n = n;
        best_lo = lo;
        best_hi = hi;
      }
    }
    if (best_n == 0) continue;
    // The top return stands for the column; averaging the group would pull in
    // low hits from a rail that ends against the wall.
    std::size_t top_k = best_lo;
    for (std::size_t k = best_lo; k <= best_hi; ++k)
      if (pts[k]->p.z() > pts[top_k]->p.z()) top_k = k;
    out.push_back({pts[top_k]->p.head<2>(), best_top});
  }
  return out;
}

}  // namespace

void WallsConfig::validate() const {
  if (!(fit_tol > 0.0)) throw ConfigError("walls.fit_tol must be positive");
  if (min_support < 2) throw ConfigError("walls.min_support must be at least 2");
}

Line2 WallLandmark::oriented() const { return line.normal().dot(side) >= 0.0 ? line : line.flipped(); }

std::pair<double, double> WallLandmark::extent() const {
  const Vec2 t = oriented().tangent();
  const double a = end_a.dot(t);
  const double b = end_b.dot(t);
  return {std::min(a, b), std::max(a, b)};
}

std::pair<Vec2, Vec2> WallLandmark::segment() const { return {line.closest_point(end_a), line.closest_point(end_b)}; }

std::vector<WallObservation> extract_walls(const Scan& scan, const WallsConfig& cfg) {
  cfg.validate();
  std::vector<Column> cols = vertical_columns(scan, cfg);
  std::vector<WallObservation> out;
  if (cols.size() < static_cast<std::size_t>(cfg.min_support)) return out;

  // Start the cyclic azimuth ordering right after the widest gap.
  std::size_t start = 0;
  double widest = -1.0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double gap = (cols[(k + 1) % cols.size()].p - cols[k].p).norm();
    if (gap > widest) {
      widest = gap;
      start = (k + 1) % cols.size();
    }
  }
  std::rotate(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(start), cols.end());
  std::vector<Vec2> pts;
  pts.reserve(cols.size());
  for (const auto& c : cols) pts.push_back(c.p);

  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t run_start = 0;
  for (std::size_t k = 1; k <= pts.size(); ++k) {
    if (k == pts.size() || (pts[k] - pts[k - 1]).norm() > cfg.break_gap) {
      runs.emplace_back(run_start, k - 1);
      run_start = k;
    }
  }

  for (const auto& [lo, hi] : runs) {
    std::vector<std::pair<std::size_t, std::size_t>> segs;
    split(pts, lo, hi, cfg.fit_tol, segs);

    // Merge neighbours that remain collinear within tolerance.
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& s : segs) {
      if (!merged.empty() && merged.back().second == s.first) {
        const LineFit joint = fit_line(pts, merged.back().first, s.second);
        if (joint.max_dev <= cfg.fit_tol) {
          merged.back().second = s.second;
          continue;
        }
      }
      merged.push_back(s);
    }

    for (auto [a, b] : merged) {
      // Trim end points that belong to a neighbouring surface.
      while (b - a + 1 > 3) {
        const LineFit inner = fit_line(pts, a + 1, b - 1);
        const double tol = std::max(cfg.trim_floor, 4.0 * inner.rms);
        const double ea = std::abs(inner.line.signed_distance(pts[a]));
        const double eb = std::abs(inner.line.signed_distance(pts[b]));
        if (std::max(ea, eb) <= tol) break;
        if (ea >= eb)
          ++a;
        else
          --b;
      }
      const LineFit fit = fit_line(pts, a, b);
      const int support = static_cast<int>(b - a + 1);
      if (support < cfg.min_support) continue;
      int tall = 0;
      for (std::size_t k = a; k <= b; ++k) tall += cols[k].top >= cfg.min_top_height ? 1 : 0;
      if (tall < cfg.min_tall_columns) continue;
      if (fit.rms > cfg.fit_tol) continue;
      WallObservation obs;
      obs.line = fit.line;
      obs.support = support;
      obs.rms = fit.rms;
      const Vec2 t = obs.line.tangent();
      obs.s_min = std::numeric_limits<double>::infinity();
      obs.s_max = -std::numeric_limits<double>::infinity();
      for (std::size_t k = a; k <= b; ++k) {
        obs.s_min = std::min(obs.s_min, pts[k].dot(t));
        obs.s_max = std::max(obs.s_max, pts[k].dot(t));
      }
      out.push_back(obs);
    }
  }
  return out;
}

Line2 observation_in_world(const WallObservation& obs, const Pose2& pose) { return line_to_world_oriented(pose, obs.line); }

std::optional<int> associate_wall(const WallObservation& obs, const Pose2& pose, const std::vector<WallLandmark>& landmarks,
                                  const WallsConfig& cfg) {
  const Line2 world = observation_in_world(obs, pose);
  const Vec2 a = pose.transform(obs.endpoint_min());
  const Vec2 b = pose.transform(obs.endpoint_max());
  const double max_angle = deg2rad(cfg.assoc_angle_deg);

  std::optional<int> best;
  double best_angle = std::numeric_limits<double>::infinity();
  for (const auto& lm : landmarks) {
    const Line2 ref = lm.oriented();
    const double dang = std::abs(wrap_angle(world.theta_n - ref.theta_n));
    if (dang >= max_angle) continue;
    // Offset of the observed segment's midpoint from the landmark, along its normal.
    const double dd = std::abs(ref.signed_distance(0.5 * (a + b)));
    if (dd >= cfg.assoc_dist) continue;
    const Vec2 t = ref.tangent();
    const auto [l0, l1] = lm.extent();
    const double o0 = std::min(a.dot(t), b.dot(t));
    const double o1 = std::max(a.dot(t), b.dot(t));
    const double gap = std::max(o0 - l1, l0 - o1);
    if (gap > cfg.assoc_gap) continue;
    if (dang < best_angle) {
      best_angle = dang;
      best = lm.id;
    }
  }
  return best;
}

WallLandmark make_landmark(int id, int keyframe, const WallObservation& obs, const Pose2& pose) {
  WallLandmark lm;
  lm.id = id;
  const Line2 world = observation_in_world(obs, pose);
  lm.line = canonicalize(world);
  lm.side = world.normal();
  lm.end_a = pose.transform(obs.endpoint_min());
  lm.end_b = pose.transform(obs.endpoint_max());
  lm.observations.emplace_back(keyframe, obs);
  return lm;
}

void attach_observation(WallLandmark& lm, int keyframe, const WallObservation& obs, const Pose2& pose) {
  const Vec2 t = lm.oriented().tangent();
  const Vec2 a = pose.transform(obs.endpoint_min());
  const Vec2 b = pose.transform(obs.endpoint_max());
  const Vec2* candidates[] = {&lm.end_a, &lm.end_b, &a, &b};
  Vec2 lo = *candidates[0];
  Vec2 hi = *candidates[0];
  for (const Vec2* p : candidates) {
    if (p->dot(t) < lo.dot(t)) lo = *p;
    if (p->dot(t) > hi.dot(t)) hi = *p;
  }
  lm.end_a = lo;
  lm.end_b = hi;
  lm.observations.emplace_back(keyframe, obs);
}

double distance_to_segment(const WallLandmark& lm, const Vec2& p) {
  const auto [a, b] = lm.segment();
  return point_segment_distance(p, a, b);
}

}  // namespace tsg
