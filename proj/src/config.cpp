#include "tsg/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include "tsg/errors.hpp"

namespace tsg {

std::string to_string(ClusterBackend b) { return b == ClusterBackend::Traversability ? "traversability" : "esdf"; }

ClusterBackend parse_backend(const std::string& s) {
  if (s == "traversability") return ClusterBackend::Traversability;
  if (s == "esdf") return ClusterBackend::Esdf;
  throw ConfigError("unknown cluster backend: " + s);
}

void RunConfig::zero_noise() {
  odom = OdometryNoise::zero();
  lidar.range_noise_sigma = 0.0;
}

void RunConfig::validate() const {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (repeats_parallel < 1) throw ConfigError("repeats_parallel must be at least 1");
  if (traverses < 1) throw ConfigError("traverses must be at least 1");
  if (!(speed > 0.0)) throw ConfigError("speed must be positive");
  lidar.validate();
  trav.validate();
  cluster.validate();
  walls.validate();
  rooms.validate();
}

namespace {

using Json = nlohmann::json;

struct Key {
  std::function<void(RunConfig&, const Json&)> set;
  std::function<Json(const RunConfig&)> get;
};

template <typename T, typename Get>
Key field(Get getter) {
  return {[getter](RunConfig& c, const Json& v) { getter(c) = v.get<T>(); },
          [getter](const RunConfig& c) { return Json(getter(const_cast<RunConfig&>(c))); }};
}

#define TSG_FIELD(T, expr) field<T>([](RunConfig& c) -> T& { return expr; })

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> k = {
      {"scenario", TSG_FIELD(std::string, c.scenario)},
      {"seed", TSG_FIELD(std::uint64_t, c.seed)},
      {"repeats", TSG_FIELD(int, c.repeats)},
      {"timing", TSG_FIELD(bool, c.timing)},
      {"repeats_parallel", TSG_FIELD(int, c.repeats_parallel)},
      {"traverses", TSG_FIELD(int, c.traverses)},
      {"speed", TSG_FIELD(double, c.speed)},
      {"lidar.max_range", TSG_FIELD(double, c.lidar.max_range)},
      {"lidar.range_noise_sigma", TSG_FIELD(double, c.lidar.range_noise_sigma)},
      {"lidar.sensor_height", TSG_FIELD(double, c.lidar.sensor_height)},
      {"lidar.h_res_deg",
       {[](RunConfig& c, const Json& v) { c.lidar.h_res = deg2rad(v.get<double>()); },
        [](const RunConfig& c) { return Json(rad2deg(c.lidar.h_res)); }}},
      {"odom.sigma_x", TSG_FIELD(double, c.odom.sigma_x)},
      {"odom.sigma_y", TSG_FIELD(double, c.odom.sigma_y)},
      {"odom.sigma_theta", TSG_FIELD(double, c.odom.sigma_theta)},
      {"trav.cell_size", TSG_FIELD(double, c.trav.cell_size)},
      {"trav.tau", TSG_FIELD(double, c.trav.tau)},
      {"trav.phi_max_deg", TSG_FIELD(double, c.trav.phi_max_deg)},
      {"trav.s_max", TSG_FIELD(double, c.trav.s_max)},
      {"trav.n_min", TSG_FIELD(int, c.trav.n_min)},
      {"trav.kernel_radius", TSG_FIELD(double, c.trav.kernel_radius)},
      {"trav.delta_g", TSG_FIELD(double, c.trav.delta_g)},
      {"cluster.lambda_th", TSG_FIELD(double, c.cluster.lambda_th)},
      {"cluster.voxel_size", TSG_FIELD(double, c.cluster.voxel_size)},
      {"cluster.backend",
       {[](RunConfig& c, const Json& v) { c.cluster.backend = parse_backend(v.get<std::string>()); },
        [](const RunConfig& c) { return Json(to_string(c.cluster.backend)); }}},
      {"walls.fit_tol", TSG_FIELD(double, c.walls.fit_tol)},
      {"walls.min_support", TSG_FIELD(int, c.walls.min_support)},
      {"walls.assoc_angle_deg", TSG_FIELD(double, c.walls.assoc_angle_deg)},
      {"walls.assoc_dist", TSG_FIELD(double, c.walls.assoc_dist)},
      {"rooms.strategy",
       {[](RunConfig& c, const Json& v) { c.rooms.strategy = parse_strategy(v.get<std::string>()); },
        [](const RunConfig& c) { return Json(to_string(c.rooms.strategy)); }}},
      {"rooms.tau_w", TSG_FIELD(double, c.rooms.tau_w)},
      {"rooms.tau_psi_deg", TSG_FIELD(double, c.rooms.tau_psi_deg)},
      {"rooms.timer_interval", TSG_FIELD(double, c.rooms.timer_interval)},
      {"rooms.rho", TSG_FIELD(double, c.rooms.rho)},
      {"rooms.assoc_center_dist", TSG_FIELD(double, c.rooms.assoc_center_dist)},
      {"opt.max_iters", TSG_FIELD(int, c.opt.max_iters)},
      {"opt.eps", TSG_FIELD(double, c.opt.eps)},
  };
  return k;
}

#undef TSG_FIELD

void apply(RunConfig& c, const std::string& prefix, const Json& j) {
  for (const auto& [name, value] : j.items()) {
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    if (value.is_object()) {
      apply(c, key, value);
      continue;
    }
    auto it = keys().find(key);
    if (it == keys().end()) throw ConfigError("unknown config key: " + key);
    try {
      it->second.set(c, value);
    } catch (const Json::exception& e) {
      throw ConfigError("bad value for " + key + ": " + e.what());
    }
  }
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j, RunConfig base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  apply(base, "", j);
  base.validate();
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const RunConfig& c) {
  Json j = Json::object();
  for (const auto& [key, k] : keys()) j[key] = k.get(c);
  return j;
}

void apply_env(RunConfig& c) {
  const char* s = std::getenv("TSG_SEED");
  if (!s || !*s) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("TSG_SEED is not an integer: ") + s);
  c.seed = v;
}

}  // namespace tsg
