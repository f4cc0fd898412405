#include "tsg/geometry.hpp"

#include <algorithm>

namespace tsg {

double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

double wrap_axis(double a) {
  double r = std::fmod(a, kPi);
  if (r < 0.0) r += kPi;
  if (r >= kPi) r -= kPi;
  return r;
}

double axis_distance(double a, double b) {
  const double diff = wrap_axis(a - b);
  return std::min(diff, kPi - diff);
}

Eigen::Matrix2d Pose2::rotation() const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Vec2 Pose2::transform(const Vec2& p) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * p.x() - s * p.y() + x, s * p.x() + c * p.y() + y};
}

Vec2 Pose2::inverse_transform(const Vec2& p) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double dx = p.x() - x;
  const double dy = p.y() - y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Pose2 compose(const Pose2& a, const Pose2& b) {
  const Vec2 t = a.transform(b.translation());
  return {t.x(), t.y(), a.theta + b.theta};
}

Pose2 inverse(const Pose2& a) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return {-(c * a.x + s * a.y), s * a.x - c * a.y, -a.theta};
}

Line2 Line2::flipped() const { return {wrap_angle(theta_n + kPi), -d}; }

Line2 canonicalize(const Line2& l) {
  Line2 out{wrap_angle(l.theta_n), l.d};
  if (out.d < 0.0) out = out.flipped();
  if (out.d == 0.0 && (out.theta_n <= -kPi / 2.0 || out.theta_n > kPi / 2.0)) {
    out.theta_n = wrap_angle(out.theta_n + kPi);
  }
  return out;
}

Line2 line_through(const Vec2& a, const Vec2& b) {
  const Vec2 dir = (b - a).normalized();
  const Vec2 n{dir.y(), -dir.x()};
  return canonicalize({std::atan2(n.y(), n.x()), n.dot(a)});
}

Line2 line_to_frame_oriented(const Pose2& pose, const Line2& world_line) {
  const Vec2 n = world_line.normal();
  return {wrap_angle(world_line.theta_n - pose.theta), world_line.d - n.dot(pose.translation())};
}

Line2 line_to_world_oriented(const Pose2& pose, const Line2& local_line) {
  const double theta = wrap_angle(local_line.theta_n + pose.theta);
  const Vec2 n{std::cos(theta), std::sin(theta)};
  return {theta, local_line.d + n.dot(pose.translation())};
}

Line2 line_to_frame(const Pose2& pose, const Line2& world_line) {
  return canonicalize(line_to_frame_oriented(pose, world_line));
}

Line2 line_to_world(const Pose2& pose, const Line2& local_line) {
  return canonicalize(line_to_world_oriented(pose, local_line));
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace tsg
