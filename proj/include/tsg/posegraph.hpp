#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "tsg/geometry.hpp"

namespace tsg {

enum class FactorKind { PriorPose, Odom, PoseWall, RoomPair };
enum class VarType { Pose, Wall, Room };

struct VarRef {
  VarType type;
  int id;
  auto operator<=>(const VarRef&) const = default;
};

int var_dim(VarType t);

/// Index layout:
///   PriorPose: i
///   Odom:      i -> j
///   PoseWall:  pose i, wall j
///   RoomPair:  room k, walls i (a) and j (b)
struct Factor {
  FactorKind kind = FactorKind::PriorPose;
  int i = -1;
  int j = -1;
  int k = -1;
  Pose2 pose_meas;  // PriorPose target or Odom relative motion
  Line2 line_meas;  // PoseWall observation, robot frame, canonical
  Eigen::MatrixXd info;

  int dim() const;
  std::vector<VarRef> vars() const;
};

struct NoiseModel {
  double odom_xy = 0.02;
  double odom_theta = 0.005;
  double wall_theta = 0.02;
  double wall_d = 0.03;
  double room = 0.05;
  double prior = 1e-3;

  Eigen::Matrix3d odom_info() const;
  Eigen::Matrix2d wall_info() const;
  Eigen::Matrix<double, 1, 1> room_info() const;
  Eigen::Matrix3d prior_info() const;
};

class FactorGraph {
 public:
  std::map<int, Pose2> poses;
  std::map<int, Line2> walls;
  std::map<int, Vec2> rooms;
  std::vector<Factor> factors;

  void add_prior(int i, const Pose2& target, const Eigen::Matrix3d& info);
  void add_odom(int i, int j, const Pose2& rel, const Eigen::Matrix3d& info);
  void add_pose_wall(int i, int wall, const Line2& obs, const Eigen::Matrix2d& info);
  void add_room_pair(int room, int wall_a, int wall_b, const Eigen::Matrix<double, 1, 1>& info);

  bool has(const VarRef& v) const;
  std::size_t num_vars() const { return poses.size() + walls.size() + rooms.size(); }
  std::size_t dims() const { return 3 * poses.size() + 2 * walls.size() + 2 * rooms.size(); }

  /// Throws MissingVariable or ValidationError.
  void validate() const;
  double chi2() const;
};

/// Unweighted residual of one factor. Throws MissingVariable.
Eigen::VectorXd residual(const Factor& f, const FactorGraph& g);

struct FactorLinearization {
  Eigen::VectorXd e;
  std::vector<std::pair<VarRef, Eigen::MatrixXd>> blocks;  // d e / d var, in vars() order
};

/// Analytic Jacobians with respect to the additive local increments.
FactorLinearization linearize(const Factor& f, const FactorGraph& g);
std::vector<FactorLinearization> linearize(const FactorGraph& g);

/// Applies an additive increment to one variable (poses re-wrap, walls
/// re-canonicalize).
void apply_increment(FactorGraph& g, const VarRef& v, const Eigen::VectorXd& delta);

struct OptimizerConfig {
  int max_iters = 50;
  double eps = 1e-9;
  double lambda_init = 1e-4;
  double lambda_max = 1e8;
  /// Below this chi2 the graph counts as solved and is left untouched.
  double chi2_floor = 1e-12;
};

struct OptStats {
  double chi2_initial = 0.0;
  double chi2_final = 0.0;
  int iters = 0;
  int accepted = 0;
  double wall_time = 0.0;  // seconds
  std::vector<double> trace;  // chi2 at start and after every accepted step
};

/// Levenberg-Marquardt on the damped sparse normal equations. Throws
/// SingularSystem when the graph has no anchor or the factorization fails.
OptStats optimize(FactorGraph& g, const OptimizerConfig& cfg = {});

struct GraphUpdate {
  std::map<int, Pose2> poses;
  std::map<int, Line2> walls;
  std::map<int, Vec2> rooms;
  std::vector<Factor> factors;
};

/// Inserts the new variables and factors, then optimizes.
OptStats incremental_update(FactorGraph& g, const GraphUpdate& update, const OptimizerConfig& cfg = {});

nlohmann::json graph_to_json(const FactorGraph& g);

std::string to_string(FactorKind k);

}  // namespace tsg
