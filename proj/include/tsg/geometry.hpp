#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace tsg {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Wraps an angle to [0, pi); used for undirected axes.
double wrap_axis(double a);

/// Smallest absolute difference between two undirected axes, in [0, pi/2].
double axis_distance(double a, double b);

/// SE(2) pose. Heading is kept wrapped to (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  static Pose2 identity() { return {}; }

  Vec2 translation() const { return {x, y}; }
  Eigen::Matrix2d rotation() const;

  /// Maps a point from this pose's frame into the parent frame.
  Vec2 transform(const Vec2& p) const;
  /// Maps a point from the parent frame into this pose's frame.
  Vec2 inverse_transform(const Vec2& p) const;

  Eigen::Vector3d vector() const { return {x, y, theta}; }
};

Pose2 compose(const Pose2& a, const Pose2& b);
Pose2 inverse(const Pose2& a);

/// 2-D line {p : p . n(theta_n) = d}. Canonical form has d >= 0, and
/// theta_n in (-pi/2, pi/2] when d == 0.
struct Line2 {
  double theta_n = 0.0;
  double d = 0.0;

  Line2() = default;
  Line2(double theta, double dist) : theta_n(theta), d(dist) {}

  Vec2 normal() const { return {std::cos(theta_n), std::sin(theta_n)}; }
  /// Unit direction along the line (normal rotated by +90 degrees).
  Vec2 tangent() const { return {-std::sin(theta_n), std::cos(theta_n)}; }
  double signed_distance(const Vec2& p) const { return p.dot(normal()) - d; }
  Vec2 closest_point(const Vec2& p) const { return p - signed_distance(p) * normal(); }

  /// Same line with the normal flipped: (theta + pi, -d).
  Line2 flipped() const;
};

Line2 canonicalize(const Line2& l);

/// Line through two distinct points (canonical).
Line2 line_through(const Vec2& a, const Vec2& b);

/// Expresses a world-frame line in the frame of `pose` (canonical result).
Line2 line_to_frame(const Pose2& pose, const Line2& world_line);
/// Expresses a line given in the frame of `pose` in the world frame (canonical result).
Line2 line_to_world(const Pose2& pose, const Line2& local_line);

/// Non-canonicalizing variants: keep the normal orientation of the input.
Line2 line_to_frame_oriented(const Pose2& pose, const Line2& world_line);
Line2 line_to_world_oriented(const Pose2& pose, const Line2& local_line);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace tsg
