#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "tsg/config.hpp"
#include "tsg/freespace.hpp"
#include "tsg/metrics.hpp"
#include "tsg/posegraph.hpp"
#include "tsg/rooms.hpp"
#include "tsg/traversability.hpp"
#include "tsg/walls.hpp"
#include "tsg/world.hpp"

namespace tsg {

struct KeyframeRecord {
  int index = 0;
  int traverse = 0;
  double t = 0.0;
  Pose2 ground_truth;
  Pose2 dead_reckoning;
  Pose2 estimate;  // optimized pose right after this keyframe
  std::vector<Vec2> cluster;  // robot cluster nodes (empty when clustering failed)
  std::optional<WidthAxis> aisle;
  std::vector<int> observed_walls;
};

struct RunResult {
  Scenario scenario;
  RunConfig config;
  std::uint64_t seed = 0;
  std::vector<KeyframeRecord> keyframes;
  std::vector<RoomEvent> events;
  std::vector<Room> rooms;  // one per room id, geometry of its first event, center kept optimized
  std::vector<WallLandmark> landmarks;
  FactorGraph graph;
  std::vector<OptStats> opt_stats;
  std::vector<std::vector<Room>> traverse_rooms;  // per traverse: last candidate of every room id seen
  TravGrid trav;
  std::vector<Vec2> occupied;
  RunArtifacts artifacts;
  MetricsReport metrics;
  /// Keyframes whose robot cluster holds nodes from two different "side:"
  /// ground-truth regions (a cluster spanning the rail line).
  std::vector<int> under_segmented;
};

/// Sensor -> traversability -> free space -> walls -> rooms -> pose graph
/// over `config.traverses` passes of the scenario's closed trajectory.
RunResult run_pipeline(const Scenario& scenario, const RunConfig& config, std::uint64_t seed);

/// Two configurations over the same scenario and seed, advanced one keyframe
/// at a time in alternation. Meant for timing comparisons: load changes on the
/// machine hit both runs alike. Results equal two separate run_pipeline calls.
std::pair<RunResult, RunResult> run_pipeline_lockstep(const Scenario& scenario, const RunConfig& a, const RunConfig& b,
                                                      std::uint64_t seed, bool b_first = false);

struct ExperimentResult {
  std::vector<MetricsReport> per_run;
  std::vector<std::uint64_t> seeds;
  MetricsReport mean;
  RunResult last;
  int under_segmented_runs = 0;
  std::size_t accepted_steps = 0;
  std::size_t chi2_increases = 0;  // accepted steps whose chi2 went up; must stay 0
};

/// Runs `repeats` pipelines with seeds seed, seed + 1, ... and averages the
/// metrics. Module errors are rethrown tagged with the repeat and seed.
/// Repeats run on `repeats_parallel` threads unless timing mode is on.
ExperimentResult run_experiment(const RunConfig& config);

}  // namespace tsg
