#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "tsg/freespace.hpp"
#include "tsg/posegraph.hpp"
#include "tsg/rooms.hpp"
#include "tsg/sensor.hpp"
#include "tsg/traversability.hpp"
#include "tsg/walls.hpp"

namespace tsg {

std::string to_string(ClusterBackend b);
ClusterBackend parse_backend(const std::string& s);

struct RunConfig {
  std::string scenario = "four_rooms";
  std::uint64_t seed = 1;
  int repeats = 10;
  bool timing = false;
  int repeats_parallel = 1;  // worker threads for repeats; timing mode forces 1
  int traverses = 2;
  double speed = 0.25;  // m/s, sets keyframe timestamps

  LidarConfig lidar;
  OdometryNoise odom;
  TravConfig trav;
  ClusterConfig cluster;
  WallsConfig walls;
  RoomsConfig rooms;
  NoiseModel noise;
  OptimizerConfig opt;

  /// Sets injected odometry and range noise to zero.
  void zero_noise();
  void validate() const;
};

/// Reads nested JSON ({"rooms": {"tau_w": 0.8}, ...}) or dotted keys
/// ({"rooms.tau_w": 0.8}) over the defaults. Unknown keys throw ConfigError.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& c);

/// Applies TSG_SEED from the environment when set.
void apply_env(RunConfig& c);

}  // namespace tsg
