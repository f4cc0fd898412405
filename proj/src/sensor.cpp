#include "tsg/sensor.hpp"

#include <limits>
#include <ostream>

#include "tsg/errors.hpp"

namespace tsg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Horizontal distance along the 2-D ray (origin o, unit dir u) to segment ab,
// or +inf when they do not cross.
double ray_segment(const Vec2& o, const Vec2& u, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double denom = u.x() * e.y() - u.y() * e.x();
  if (std::abs(denom) < 1e-15) return std::numeric_limits<double>::infinity();
  const Vec2 w = a - o;
  const double t = (w.x() * e.y() - w.y() * e.x()) / denom;
  const double s = (w.x() * u.y() - w.y() * u.x()) / denom;
  if (t <= 1e-12 || s < 0.0 || s > 1.0) return std::numeric_limits<double>::infinity();
  return t;
}

}  // namespace

Rng substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ed270b27c1a5f3ULL)));
}

std::vector<double> LidarConfig::default_rings() {
  std::vector<double> rings;
  for (int k = 0; k < 16; ++k) rings.push_back(deg2rad(-15.0 + 2.0 * k));
  return rings;
}

int LidarConfig::azimuth_count() const { return static_cast<int>(std::lround(2.0 * kPi / h_res)); }

void LidarConfig::validate() const {
  if (!(h_res > 0.0)) throw ConfigError("lidar h_res must be positive");
  if (rings.empty()) throw ConfigError("lidar needs at least one ring");
  if (!(max_range > 0.0)) throw ConfigError("lidar max_range must be positive");
  if (range_noise_sigma < 0.0) throw ConfigError("lidar range noise must be non-negative");
}

Scan raycast(const Scenario& scenario, const Pose2& pose, const LidarConfig& cfg, Rng& rng) {
  if (!scenario.is_ground(pose.translation())) throw PoseOffMap("sensor pose is not over a GROUND cell");
  cfg.validate();

  Scan scan;
  scan.sensor_height = cfg.sensor_height;
  const int n_az = cfg.azimuth_count();
  scan.points.reserve(cfg.rings.size() * static_cast<std::size_t>(n_az));
  std::normal_distribution<double> noise(0.0, 1.0);
  const Vec2 origin = pose.translation();
  const double h = cfg.sensor_height;

  for (int ring = 0; ring < static_cast<int>(cfg.rings.size()); ++ring) {
    const double elev = cfg.rings[ring];
    const double ce = std::cos(elev);
    const double se = std::sin(elev);
    for (int az = 0; az < n_az; ++az) {
      const double local_az = az * cfg.h_res;
      const double world_az = pose.theta + local_az;
      const Vec2 u{std::cos(world_az), std::sin(world_az)};

      double best = std::numeric_limits<double>::infinity();
      for (const auto& o : scenario.obstacles) {
        const double t2 = ray_segment(origin, u, o.p0, o.p1);
        if (!std::isfinite(t2)) continue;
        const double range = t2 / ce;
        const double z = h + range * se;
        if (z < o.z_low || z > o.z_high) continue;
        best = std::min(best, range);
      }
      if (se < 0.0) {
        const double range = h / -se;
        if (range < best) {
          const Vec2 hit = origin + range * ce * u;
          if (scenario.is_ground(hit)) best = range;
        }
      }
      if (!(best <= cfg.max_range)) continue;

      double range = best;
      if (cfg.range_noise_sigma > 0.0) range += cfg.range_noise_sigma * noise(rng);
      const double horiz = range * ce;
      scan.points.push_back({Vec3{horiz * std::cos(local_az), horiz * std::sin(local_az), h + range * se}, ring, az});
    }
  }
  return scan;
}

Pose2 odometry(const Pose2& prev_gt, const Pose2& curr_gt, const OdometryNoise& n, Rng& rng) {
  const Pose2 rel = compose(inverse(prev_gt), curr_gt);
  if (n.sigma_x == 0.0 && n.sigma_y == 0.0 && n.sigma_theta == 0.0) return rel;
  std::normal_distribution<double> g(0.0, 1.0);
  const double dx = n.sigma_x * g(rng);
  const double dy = n.sigma_y * g(rng);
  const double dt = n.sigma_theta * g(rng);
  return {rel.x + dx, rel.y + dy, rel.theta + dt};
}

void write_scan_csv(std::ostream& out, const Scan& scan) {
  out << "ring,azimuth,x,y,z\n";
  for (const auto& p : scan.points) out << p.ring << ',' << p.azimuth << ',' << p.p.x() << ',' << p.p.y() << ',' << p.p.z() << '\n';
}

}  // namespace tsg
