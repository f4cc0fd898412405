#include "tsg/posegraph.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "tsg/errors.hpp"

namespace tsg {

int var_dim(VarType t) { return t == VarType::Pose ? 3 : 2; }

int Factor::dim() const {
  switch (kind) {
    case FactorKind::PriorPose:
    case FactorKind::Odom:
      return 3;
    case FactorKind::PoseWall:
      return 2;
    case FactorKind::RoomPair:
      return 1;
  }
  return 0;
}

std::vector<VarRef> Factor::vars() const {
  switch (kind) {
    case FactorKind::PriorPose:
      return {{VarType::Pose, i}};
    case FactorKind::Odom:
      return {{VarType::Pose, i}, {VarType::Pose, j}};
    case FactorKind::PoseWall:
      return {{VarType::Pose, i}, {VarType::Wall, j}};
    case FactorKind::RoomPair:
      return {{VarType::Room, k}, {VarType::Wall, i}, {VarType::Wall, j}};
  }
  return {};
}

std::string to_string(FactorKind k) {
  switch (k) {
    case FactorKind::PriorPose:
      return "PRIOR_POSE";
    case FactorKind::Odom:
      return "ODOM";
    case FactorKind::PoseWall:
      return "POSE_WALL";
    case FactorKind::RoomPair:
      return "ROOM_PAIR";
  }
  return "?";
}

Eigen::Matrix3d NoiseModel::odom_info() const {
  return Eigen::Vector3d(1.0 / (odom_xy * odom_xy), 1.0 / (odom_xy * odom_xy), 1.0 / (odom_theta * odom_theta)).asDiagonal();
}
Eigen::Matrix2d NoiseModel::wall_info() const {
  return Eigen::Vector2d(1.0 / (wall_theta * wall_theta), 1.0 / (wall_d * wall_d)).asDiagonal();
}
Eigen::Matrix<double, 1, 1> NoiseModel::room_info() const {
  return Eigen::Matrix<double, 1, 1>::Constant(1.0 / (room * room));
}
Eigen::Matrix3d NoiseModel::prior_info() const { return Eigen::Matrix3d::Identity() / (prior * prior); }

void FactorGraph::add_prior(int i, const Pose2& target, const Eigen::Matrix3d& info) {
  Factor f;
  f.kind = FactorKind::PriorPose;
  f.i = i;
  f.pose_meas = target;
  f.info = info;
  factors.push_back(f);
}

void FactorGraph::add_odom(int i, int j, const Pose2& rel, const Eigen::Matrix3d& info) {
  Factor f;
  f.kind = FactorKind::Odom;
  f.i = i;
  f.j = j;
  f.pose_meas = rel;
  f.info = info;
  factors.push_back(f);
}

void FactorGraph::add_pose_wall(int i, int wall, const Line2& obs, const Eigen::Matrix2d& info) {
  Factor f;
  f.kind = FactorKind::PoseWall;
  f.i = i;
  f.j = wall;
  f.line_meas = canonicalize(obs);
  f.info = info;
  factors.push_back(f);
}

void FactorGraph::add_room_pair(int room, int wall_a, int wall_b, const Eigen::Matrix<double, 1, 1>& info) {
  Factor f;
  f.kind = FactorKind::RoomPair;
  f.k = room;
  f.i = wall_a;
  f.j = wall_b;
  f.info = info;
  factors.push_back(f);
}

bool FactorGraph::has(const VarRef& v) const {
  switch (v.type) {
    case VarType::Pose:
      return poses.count(v.id) > 0;
    case VarType::Wall:
      return walls.count(v.id) > 0;
    case VarType::Room:
      return rooms.count(v.id) > 0;
  }
  return false;
}

void FactorGraph::validate() const {
  for (const auto& f : factors) {
    for (const auto& v : f.vars())
      if (!has(v)) throw MissingVariable(to_string(f.kind) + " factor references missing variable " + std::to_string(v.id));
    if (f.info.rows() != f.dim() || f.info.cols() != f.dim())
      throw ValidationError(to_string(f.kind) + " factor information has the wrong shape");
    if (!f.info.isApprox(f.info.transpose())) throw ValidationError("information matrix is not symmetric");
  }
}

namespace {

const Pose2& pose_of(const FactorGraph& g, int id) {
  auto it = g.poses.find(id);
  if (it == g.poses.end()) throw MissingVariable("pose " + std::to_string(id));
  return it->second;
}
const Line2& wall_of(const FactorGraph& g, int id) {
  auto it = g.walls.find(id);
  if (it == g.walls.end()) throw MissingVariable("wall " + std::to_string(id));
  return it->second;
}
const Vec2& room_of(const FactorGraph& g, int id) {
  auto it = g.rooms.find(id);
  if (it == g.rooms.end()) throw MissingVariable("room " + std::to_string(id));
  return it->second;
}

Eigen::Matrix2d rot(double th) {
  Eigen::Matrix2d r;
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return r;
}

// d R(th)^T / d th
Eigen::Matrix2d drot_t(double th) {
  Eigen::Matrix2d r;
  r << -std::sin(th), std::cos(th), -std::cos(th), -std::sin(th);
  return r;
}

// Sign applied to the distance when the predicted line is brought to
// canonical form.
double canonical_sign(const Line2& oriented) {
  if (oriented.d > 0.0) return 1.0;
  if (oriented.d < 0.0) return -1.0;
  return canonicalize(oriented).theta_n == oriented.theta_n ? 1.0 : -1.0;
}

double pair_sign(const Line2& a, const Line2& b) { return a.normal().dot(b.normal()) >= 0.0 ? 1.0 : -1.0; }

}  // namespace

Eigen::VectorXd residual(const Factor& f, const FactorGraph& g) {
  switch (f.kind) {
    case FactorKind::PriorPose: {
      const Pose2& x = pose_of(g, f.i);
      return Eigen::Vector3d(x.x - f.pose_meas.x, x.y - f.pose_meas.y, wrap_angle(x.theta - f.pose_meas.theta));
    }
    case FactorKind::Odom: {
      const Pose2 e = compose(inverse(f.pose_meas), compose(inverse(pose_of(g, f.i)), pose_of(g, f.j)));
      return e.vector();
    }
    case FactorKind::PoseWall: {
      const Line2 pred = line_to_frame(pose_of(g, f.i), wall_of(g, f.j));
      return Eigen::Vector2d(wrap_angle(pred.theta_n - f.line_meas.theta_n), pred.d - f.line_meas.d);
    }
    case FactorKind::RoomPair: {
      const Vec2& c = room_of(g, f.k);
      const Line2& a = wall_of(g, f.i);
      const Line2& b = wall_of(g, f.j);
      Eigen::VectorXd e(1);
      e(0) = c.dot(a.normal()) - 0.5 * (a.d + pair_sign(a, b) * b.d);
      return e;
    }
  }
  return {};
}

FactorLinearization linearize(const Factor& f, const FactorGraph& g) {
  FactorLinearization out;
  out.e = residual(f, g);
  switch (f.kind) {
    case FactorKind::PriorPose:
      out.blocks.emplace_back(VarRef{VarType::Pose, f.i}, Eigen::Matrix3d::Identity());
      break;
    case FactorKind::Odom: {
      const Pose2& xi = pose_of(g, f.i);
      const Pose2& xj = pose_of(g, f.j);
      const Eigen::Matrix2d rz_t = rot(f.pose_meas.theta).transpose();
      const Eigen::Matrix2d ri_t = rot(xi.theta).transpose();
      const Vec2 dt = xj.translation() - xi.translation();
      Eigen::Matrix3d ji = Eigen::Matrix3d::Zero();
      Eigen::Matrix3d jj = Eigen::Matrix3d::Zero();
      ji.topLeftCorner<2, 2>() = -rz_t * ri_t;
      ji.block<2, 1>(0, 2) = rz_t * drot_t(xi.theta) * dt;
      ji(2, 2) = -1.0;
      jj.topLeftCorner<2, 2>() = rz_t * ri_t;
      jj(2, 2) = 1.0;
      out.blocks.emplace_back(VarRef{VarType::Pose, f.i}, ji);
      out.blocks.emplace_back(VarRef{VarType::Pose, f.j}, jj);
      break;
    }
    case FactorKind::PoseWall: {
      const Pose2& x = pose_of(g, f.i);
      const Line2& l = wall_of(g, f.j);
      const double s = canonical_sign(line_to_frame_oriented(x, l));
      const double c = std::cos(l.theta_n);
      const double sn = std::sin(l.theta_n);
      Eigen::Matrix<double, 2, 3> jp;
      jp << 0.0, 0.0, -1.0, -s * c, -s * sn, 0.0;
      Eigen::Matrix2d jw;
      jw << 1.0, 0.0, s * (x.x * sn - x.y * c), s;
      out.blocks.emplace_back(VarRef{VarType::Pose, f.i}, jp);
      out.blocks.emplace_back(VarRef{VarType::Wall, f.j}, jw);
      break;
    }
    case FactorKind::RoomPair: {
      const Vec2& c = room_of(g, f.k);
      const Line2& a = wall_of(g, f.i);
      const Line2& b = wall_of(g, f.j);
      const double s = pair_sign(a, b);
      Eigen::Matrix<double, 1, 2> jc = a.normal().transpose();
      Eigen::Matrix<double, 1, 2> ja;
      ja << c.dot(Vec2(-std::sin(a.theta_n), std::cos(a.theta_n))), -0.5;
      Eigen::Matrix<double, 1, 2> jb;
      jb << 0.0, -0.5 * s;
      out.blocks.emplace_back(VarRef{VarType::Room, f.k}, jc);
      out.blocks.emplace_back(VarRef{VarType::Wall, f.i}, ja);
      out.blocks.emplace_back(VarRef{VarType::Wall, f.j}, jb);
      break;
    }
  }
  return out;
}

std::vector<FactorLinearization> linearize(const FactorGraph& g) {
  std::vector<FactorLinearization> out;
  out.reserve(g.factors.size());
  for (const auto& f : g.factors) out.push_back(linearize(f, g));
  return out;
}

void apply_increment(FactorGraph& g, const VarRef& v, const Eigen::VectorXd& delta) {
  switch (v.type) {
    case VarType::Pose: {
      Pose2& p = g.poses.at(v.id);
      p = Pose2(p.x + delta(0), p.y + delta(1), p.theta + delta(2));
      break;
    }
    case VarType::Wall: {
      Line2& l = g.walls.at(v.id);
      l = canonicalize({l.theta_n + delta(0), l.d + delta(1)});
      break;
    }
    case VarType::Room:
      g.rooms.at(v.id) += delta.head<2>();
      break;
  }
}

double FactorGraph::chi2() const {
  double total = 0.0;
  for (const auto& f : factors) {
    const Eigen::VectorXd e = residual(f, *this);
    total += e.dot(f.info * e);
  }
  return total;
}

namespace {

struct Layout {
  std::map<VarRef, int> offset;
  int dims = 0;

  explicit Layout(const FactorGraph& g) {
    for (const auto& [id, p] : g.poses) add({VarType::Pose, id});
    for (const auto& [id, l] : g.walls) add({VarType::Wall, id});
    for (const auto& [id, r] : g.rooms) add({VarType::Room, id});
  }
  void add(const VarRef& v) {
    offset[v] = dims;
    dims += var_dim(v.type);
  }
};

void build_normal_equations(const FactorGraph& g, const Layout& layout, Eigen::SparseMatrix<double>& H, Eigen::VectorXd& b) {
  std::vector<Eigen::Triplet<double>> trip;
  b = Eigen::VectorXd::Zero(layout.dims);
  for (const auto& f : g.factors) {
    const FactorLinearization lin = linearize(f, g);
    const Eigen::VectorXd we = f.info * lin.e;
    for (std::size_t p = 0; p < lin.blocks.size(); ++p) {
      const auto& [vp, jp] = lin.blocks[p];
      const int op = layout.offset.at(vp);
      b.segment(op, jp.cols()) += jp.transpose() * we;
      const Eigen::MatrixXd wjp = f.info * jp;
      for (std::size_t q = 0; q < lin.blocks.size(); ++q) {
        const auto& [vq, jq] = lin.blocks[q];
        const int oq = layout.offset.at(vq);
        const Eigen::MatrixXd blk = jq.transpose() * wjp;  // (dq x dp)
        for (int r = 0; r < blk.rows(); ++r)
          for (int c = 0; c < blk.cols(); ++c)
            if (blk(r, c) != 0.0) trip.emplace_back(oq + r, op + c, blk(r, c));
      }
    }
  }
  H.resize(layout.dims, layout.dims);
  H.setFromTriplets(trip.begin(), trip.end());
}

}  // namespace

OptStats optimize(FactorGraph& g, const OptimizerConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  OptStats stats;
  g.validate();
  bool anchored = false;
  for (const auto& f : g.factors) anchored = anchored || f.kind == FactorKind::PriorPose;
  if (!anchored && g.num_vars() > 0) throw SingularSystem("graph has no prior anchor");

  double chi2 = g.chi2();
  stats.chi2_initial = chi2;
  stats.trace.push_back(chi2);
  double lambda = cfg.lambda_init;
  const Layout layout(g);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  Eigen::SparseMatrix<double> H;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> I(layout.dims, layout.dims);
  I.setIdentity();

  while (stats.iters < cfg.max_iters && chi2 > cfg.chi2_floor) {
    build_normal_equations(g, layout, H, b);
    ++stats.iters;
    bool accepted = false;
    double rel = 0.0;
    while (lambda <= cfg.lambda_max) {
      const Eigen::SparseMatrix<double> A = H + lambda * I;
      solver.compute(A);
      if (solver.info() != Eigen::Success) throw SingularSystem("damped normal equations could not be factorized");
      const Eigen::VectorXd delta = solver.solve(-b);
      if (solver.info() != Eigen::Success || !delta.allFinite()) throw SingularSystem("damped normal equations are singular");

      const auto saved_poses = g.poses;
      const auto saved_walls = g.walls;
      const auto saved_rooms = g.rooms;
      for (const auto& [v, off] : layout.offset) apply_increment(g, v, delta.segment(off, var_dim(v.type)));
      const double chi2_new = g.chi2();
      if (chi2_new < chi2) {
        rel = (chi2 - chi2_new) / chi2;
        chi2 = chi2_new;
        lambda /= 10.0;
        accepted = true;
        ++stats.accepted;
        stats.trace.push_back(chi2);
        break;
      }
      g.poses = saved_poses;
      g.walls = saved_walls;
      g.rooms = saved_rooms;
      lambda *= 10.0;
    }
    if (!accepted || rel < cfg.eps) break;
  }
  stats.chi2_final = chi2;
  stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

OptStats incremental_update(FactorGraph& g, const GraphUpdate& update, const OptimizerConfig& cfg) {
  for (const auto& [id, p] : update.poses) g.poses[id] = p;
  for (const auto& [id, l] : update.walls) g.walls[id] = l;
  for (const auto& [id, c] : update.rooms) g.rooms[id] = c;
  g.factors.insert(g.factors.end(), update.factors.begin(), update.factors.end());
  return optimize(g, cfg);
}

nlohmann::json graph_to_json(const FactorGraph& g) {
  nlohmann::json j;
  j["poses"] = nlohmann::json::array();
  for (const auto& [id, p] : g.poses) j["poses"].push_back({{"id", id}, {"x", p.x}, {"y", p.y}, {"theta", p.theta}});
  j["walls"] = nlohmann::json::array();
  for (const auto& [id, l] : g.walls) j["walls"].push_back({{"id", id}, {"theta_n", l.theta_n}, {"d", l.d}});
  j["rooms"] = nlohmann::json::array();
  for (const auto& [id, c] : g.rooms) j["rooms"].push_back({{"id", id}, {"center", {c.x(), c.y()}}});
  j["factors"] = nlohmann::json::array();
  for (const auto& f : g.factors) {
    nlohmann::json fj{{"kind", to_string(f.kind)}};
    switch (f.kind) {
      case FactorKind::PriorPose:
        fj["pose"] = f.i;
        break;
      case FactorKind::Odom:
        fj["from"] = f.i;
        fj["to"] = f.j;
        fj["measured"] = {f.pose_meas.x, f.pose_meas.y, f.pose_meas.theta};
        break;
      case FactorKind::PoseWall:
        fj["pose"] = f.i;
        fj["wall"] = f.j;
        fj["measured"] = {f.line_meas.theta_n, f.line_meas.d};
        break;
      case FactorKind::RoomPair:
        fj["room"] = f.k;
        fj["walls"] = {f.i, f.j};
        break;
    }
    j["factors"].push_back(fj);
  }
  return j;
}

}  // namespace tsg
