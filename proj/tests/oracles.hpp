#pragma once

// Independent reference computations for the tests. Nothing here calls the
// analytic Jacobians or the sparse solver.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tsg/posegraph.hpp"

namespace oracle {

using tsg::FactorGraph;
using tsg::VarRef;
using tsg::VarType;

inline std::vector<VarRef> variables(const FactorGraph& g) {
  std::vector<VarRef> v;
  for (const auto& [id, p] : g.poses) v.push_back({VarType::Pose, id});
  for (const auto& [id, l] : g.walls) v.push_back({VarType::Wall, id});
  for (const auto& [id, c] : g.rooms) v.push_back({VarType::Room, id});
  return v;
}

// Whitened residual stack: L^T e per factor with info = L L^T.
inline Eigen::VectorXd whitened(const FactorGraph& g) {
  std::vector<double> out;
  for (const auto& f : g.factors) {
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(f.info).matrixL();
    const Eigen::VectorXd w = L.transpose() * tsg::residual(f, g);
    out.insert(out.end(), w.data(), w.data() + w.size());
  }
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

inline void apply(FactorGraph& g, const std::vector<VarRef>& vars, const Eigen::VectorXd& dx) {
  Eigen::Index off = 0;
  for (const auto& v : vars) {
    const int d = tsg::var_dim(v.type);
    tsg::apply_increment(g, v, dx.segment(off, d));
    off += d;
  }
}

// Central-difference Jacobian of one factor's residual wrt one variable.
inline Eigen::MatrixXd numeric_block(const tsg::Factor& f, const FactorGraph& g, const VarRef& v, double h = 1e-6) {
  const int d = tsg::var_dim(v.type);
  Eigen::MatrixXd J(f.dim(), d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(d);
    dx(k) = h;
    FactorGraph plus = g, minus = g;
    tsg::apply_increment(plus, v, dx);
    tsg::apply_increment(minus, v, -dx);
    Eigen::VectorXd diff = tsg::residual(f, plus) - tsg::residual(f, minus);
    // angle residuals may straddle the wrap
    for (Eigen::Index r = 0; r < diff.size(); ++r)
      if (std::abs(diff(r)) > tsg::kPi) diff(r) -= std::copysign(2.0 * tsg::kPi, diff(r));
    J.col(k) = diff / (2.0 * h);
  }
  return J;
}

// Dense Gauss-Newton on numeric Jacobians with a minimum-norm step and
// backtracking. Meant for graphs of a dozen scalars.
inline void dense_solve(FactorGraph& g, int iters = 200) {
  const auto vars = variables(g);
  Eigen::Index n = 0;
  for (const auto& v : vars) n += tsg::var_dim(v.type);
  const double h = 1e-7;
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd r0 = whitened(g);
    Eigen::MatrixXd J(r0.size(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::VectorXd dx = Eigen::VectorXd::Zero(n);
      dx(k) = h;
      FactorGraph plus = g, minus = g;
      apply(plus, vars, dx);
      apply(minus, vars, -dx);
      J.col(k) = (whitened(plus) - whitened(minus)) / (2.0 * h);
    }
    const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-r0);
    const double c0 = r0.squaredNorm();
    double alpha = 1.0;
    bool moved = false;
    while (alpha > 1e-8) {
      FactorGraph trial = g;
      apply(trial, vars, alpha * step);
      if (whitened(trial).squaredNorm() < c0) {
        g = std::move(trial);
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved || step.norm() < 1e-13) break;
  }
}

// Poses, walls and rooms flattened in variables() order.
inline Eigen::VectorXd state(const FactorGraph& g) {
  std::vector<double> s;
  for (const auto& [id, p] : g.poses) s.insert(s.end(), {p.x, p.y, p.theta});
  for (const auto& [id, l] : g.walls) s.insert(s.end(), {l.theta_n, l.d});
  for (const auto& [id, c] : g.rooms) s.insert(s.end(), {c.x(), c.y()});
  return Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

// Small random graph of at most 12 scalars: two poses, two or three walls,
// optionally a room between an opposing pair.
inline FactorGraph random_small_graph(std::mt19937_64& rng, bool with_room) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const tsg::NoiseModel nm;
  FactorGraph g;
  const tsg::Pose2 x0(0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
  const tsg::Pose2 x1 = tsg::compose(x0, tsg::Pose2(1.0 + 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)));
  const double ang = 0.4 * u(rng);
  const tsg::Line2 wa(ang + tsg::kPi / 2.0, 2.0 + 0.3 * u(rng));
  const tsg::Line2 wb = tsg::canonicalize(tsg::Line2(ang - tsg::kPi / 2.0, 2.0 + 0.3 * u(rng)));
  const tsg::Line2 wc(ang + 0.2 * u(rng), 4.0 + 0.5 * u(rng));

  g.poses[0] = x0;
  g.poses[1] = x1;
  g.add_prior(0, x0, nm.prior_info());
  const tsg::Pose2 odo = tsg::compose(tsg::inverse(x0), x1);
  g.add_odom(0, 1, tsg::compose(odo, tsg::Pose2(0.05 * u(rng), 0.05 * u(rng), 0.02 * u(rng))), nm.odom_info());

  std::vector<tsg::Line2> walls{wa, wb};
  if (!with_room) walls.push_back(wc);
  for (int w = 0; w < static_cast<int>(walls.size()); ++w) {
    g.walls[w] = tsg::Line2(walls[w].theta_n + 0.03 * u(rng), walls[w].d + 0.05 * u(rng));
    for (int p = 0; p < 2; ++p) {
      tsg::Line2 z = tsg::line_to_frame(g.poses[p], walls[w]);
      z = tsg::canonicalize(tsg::Line2(z.theta_n + 0.01 * u(rng), z.d + 0.02 * u(rng)));
      g.add_pose_wall(p, w, z, nm.wall_info());
    }
  }
  if (with_room) {
    g.rooms[0] = tsg::Vec2(0.5 * u(rng), 0.5 * u(rng));
    g.add_room_pair(0, 0, 1, nm.room_info());
  }
  // perturb the second pose so there is something to solve
  g.poses[1] = tsg::Pose2(x1.x + 0.3 * u(rng), x1.y + 0.3 * u(rng), x1.theta + 0.1 * u(rng));
  return g;
}

}  // namespace oracle
