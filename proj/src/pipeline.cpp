#include "tsg/pipeline.hpp"

#include <future>
#include <set>
#include <tuple>

#include "tsg/errors.hpp"
#include "tsg/sensor.hpp"

namespace tsg {

namespace {

class Runner {
 public:
  Runner(const Scenario& scenario, const RunConfig& cfg, std::uint64_t seed)
      : cfg_(cfg),
        strategy_(cfg.rooms),
        occupied_(cfg.cluster.voxel_size),
        voxels_(Vec2::Zero(), Vec2(scenario.width, scenario.height), cfg.cluster.voxel_size, cfg.cluster.esdf_height_band) {
    res_.scenario = scenario;
    res_.config = cfg;
    res_.seed = seed;
    res_.trav.cell_size = cfg.trav.cell_size;
    res_.traverse_rooms.resize(static_cast<std::size_t>(cfg.traverses));
  }

  /// One keyframe, plus the end-of-traverse flush when a pass completes.
  bool step() {
    const auto& traj = res_.scenario.trajectory;
    if (traj.empty()) throw ValidationError("scenario has an empty trajectory");
    if (pass_ >= cfg_.traverses) return false;
    if (w_ == 0 && pass_ > 0) w_ = 1;  // later passes skip the shared start waypoint
    const double dt = 0.5 / cfg_.speed;
    if (w_ < traj.size()) {
      keyframe(index_, pass_, index_ * dt, traj[w_]);
      ++index_;
      ++w_;
    }
    if (w_ >= traj.size()) {
      if (auto room = strategy_.end_traverse(res_.landmarks)) on_room(*room, res_.keyframes.back());
      ++pass_;
      w_ = 0;
    }
    return pass_ < cfg_.traverses;
  }

  RunResult run() {
    while (step()) {
    }
    return take();
  }

  RunResult take() {
    while (pass_ < cfg_.traverses) step();
    finish();
    return std::move(res_);
  }

 private:
  void optimize() {
    const OptStats s = tsg::optimize(res_.graph, cfg_.opt);
    res_.opt_stats.push_back(s);
    res_.artifacts.pgo_times.push_back(s.wall_time);
    for (auto& lm : res_.landmarks) lm.line = res_.graph.walls.at(lm.id);
    for (auto& r : res_.rooms) r.center = res_.graph.rooms.at(r.id);
  }

  void keyframe(int index, int pass, double t, const Pose2& gt) {
    Rng rng = substream(res_.seed, static_cast<std::uint64_t>(index));
    const Scan scan = raycast(res_.scenario, gt, cfg_.lidar, rng);

    KeyframeRecord rec;
    rec.index = index;
    rec.traverse = pass;
    rec.t = t;
    rec.ground_truth = gt;

    Pose2 predicted = gt;
    if (index == 0) {
      rec.dead_reckoning = gt;
      res_.graph.poses[0] = gt;
      res_.graph.add_prior(0, gt, cfg_.noise.prior_info());
    } else {
      const KeyframeRecord& prev = res_.keyframes.back();
      const Pose2 rel = odometry(prev.ground_truth, gt, cfg_.odom, rng);
      rec.dead_reckoning = compose(prev.dead_reckoning, rel);
      predicted = compose(res_.graph.poses.at(index - 1), rel);
      res_.graph.poses[index] = predicted;
      res_.graph.add_odom(index - 1, index, rel, cfg_.noise.odom_info());
    }

    for (const auto& obs : extract_walls(scan, cfg_.walls)) {
      int id;
      if (auto match = associate_wall(obs, predicted, res_.landmarks, cfg_.walls)) {
        id = *match;
        attach_observation(res_.landmarks[static_cast<std::size_t>(id)], index, obs, predicted);
      } else {
        id = static_cast<int>(res_.landmarks.size());
        res_.landmarks.push_back(make_landmark(id, index, obs, predicted));
        res_.graph.walls[id] = res_.landmarks.back().line;
      }
      res_.graph.add_pose_wall(index, id, obs.line, cfg_.noise.wall_info());
      rec.observed_walls.push_back(id);
    }
    optimize();
    const Pose2 pose = res_.graph.poses.at(index);

    TravGrid local = segment_ground(scan, pose, cfg_.trav);
    bgk_smooth(local, cfg_.trav.kernel_radius);
    global_update(res_.trav, local);
    occupied_.insert_scan(scan, pose, cfg_.cluster.occupied_band);
    if (cfg_.cluster.backend == ClusterBackend::Esdf) voxels_.integrate(scan, pose);

    std::optional<FreeSpaceCluster> cluster;
    try {
      if (cfg_.cluster.backend == ClusterBackend::Traversability)
        cluster = cluster_traversable(res_.trav, cfg_.trav, occupied_, cfg_.cluster, pose);
      else
        cluster = cluster_esdf_baseline(voxels_, cfg_.cluster, pose, cfg_.lidar.sensor_height);
    } catch (const RobotNotOnNode&) {
    } catch (const RobotNotInFreeSpace&) {
    }

    KeyframeInput in;
    in.keyframe = index;
    in.t = t;
    in.observed_walls.insert(rec.observed_walls.begin(), rec.observed_walls.end());
    if (cluster) {
      rec.cluster = cluster->nodes;
      try {
        rec.aisle = width_and_axis(*cluster, occupied_, cfg_.cluster, pose);
      } catch (const DegenerateCluster&) {
      }
      const double r2 = cfg_.rooms.snapshot_radius * cfg_.rooms.snapshot_radius;
      for (const auto& p : cluster->nodes)
        if ((p - pose.translation()).squaredNorm() <= r2) in.nodes.push_back(p);
    }
    in.aisle = rec.aisle;
    rec.estimate = pose;
    res_.keyframes.push_back(std::move(rec));

    if (auto room = strategy_.step(in, res_.landmarks)) on_room(*room, res_.keyframes.back());
  }

  void on_room(Room cand, const KeyframeRecord& at) {
    for (int w : cand.wall_ids)
      if (w < 0 || w >= static_cast<int>(res_.landmarks.size())) throw ValidationError("room references a missing wall");

    RoomEvent ev;
    ev.t = at.t;
    ev.keyframe = at.index;
    ev.traverse = at.traverse;
    if (auto id = associate_room(cand, res_.rooms, cfg_.rooms)) {
      cand.id = *id;
      ev.redetected = true;
    } else {
      cand.id = static_cast<int>(res_.rooms.size());
      res_.rooms.push_back(cand);
      res_.graph.rooms[cand.id] = cand.center;
    }
    for (std::size_t k = 0; k + 1 < cand.wall_ids.size(); k += 2) {
      const auto key = std::make_tuple(cand.id, cand.wall_ids[k], cand.wall_ids[k + 1]);
      if (!room_pairs_.insert(key).second) continue;
      res_.graph.add_room_pair(cand.id, cand.wall_ids[k], cand.wall_ids[k + 1], cfg_.noise.room_info());
    }
    optimize();

    ev.room = cand;
    res_.events.push_back(ev);
    auto& list = res_.traverse_rooms[static_cast<std::size_t>(at.traverse)];
    auto it = std::find_if(list.begin(), list.end(), [&](const Room& r) { return r.id == cand.id; });
    if (it == list.end())
      list.push_back(cand);
    else
      *it = cand;
  }

  void finish() {
    for (auto& kf : res_.keyframes) kf.estimate = res_.graph.poses.at(kf.index);
    auto& art = res_.artifacts;
    for (const auto& kf : res_.keyframes) {
      art.ground_truth.push_back(kf.ground_truth);
      art.estimated.push_back(kf.estimate);
      art.dead_reckoning.push_back(kf.dead_reckoning);
    }
    art.rooms_first = res_.traverse_rooms.front();
    art.rooms_second = res_.traverse_rooms.size() > 1 ? res_.traverse_rooms[1] : std::vector<Room>{};
    res_.occupied = occupied_.points();
    res_.metrics = compute_metrics(art, &cfg_.rooms);

    std::vector<const Region*> sides;
    for (const auto& r : res_.scenario.regions)
      if (r.name.rfind("side:", 0) == 0) sides.push_back(&r);
    for (const auto& kf : res_.keyframes) {
      int spanned = 0;
      for (const Region* r : sides)
        spanned += std::any_of(kf.cluster.begin(), kf.cluster.end(), [&](const Vec2& p) { return r->contains(p); });
      if (spanned >= 2) res_.under_segmented.push_back(kf.index);
    }
  }

  RunConfig cfg_;
  RoomStrategy strategy_;
  OccupiedSet occupied_;
  VoxelMap voxels_;
  std::set<std::tuple<int, int, int>> room_pairs_;
  RunResult res_;
  int pass_ = 0;
  std::size_t w_ = 0;
  int index_ = 0;
};

RunConfig effective(const RunConfig& config) {
  RunConfig cfg = config;
  cfg.rooms.node_clearance = cfg.cluster.lambda_th;
  return cfg;
}

}  // namespace

RunResult run_pipeline(const Scenario& scenario, const RunConfig& config, std::uint64_t seed) {
  config.validate();
  scenario.validate();
  return Runner(scenario, effective(config), seed).run();
}

std::pair<RunResult, RunResult> run_pipeline_lockstep(const Scenario& scenario, const RunConfig& a, const RunConfig& b,
                                                      std::uint64_t seed, bool b_first) {
  a.validate();
  b.validate();
  scenario.validate();
  Runner ra(scenario, effective(a), seed);
  Runner rb(scenario, effective(b), seed);
  bool more_a = true, more_b = true;
  while (more_a || more_b) {
    if (b_first && more_b) more_b = rb.step();
    if (more_a) more_a = ra.step();
    if (!b_first && more_b) more_b = rb.step();
  }
  return {ra.take(), rb.take()};
}

ExperimentResult run_experiment(const RunConfig& config) {
  config.validate();
  const Scenario scenario = resolve_scenario(config.scenario);
  const int n = config.repeats;
  const int workers = config.timing ? 1 : std::min(config.repeats_parallel, n);

  const auto one = [&](int r) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
    try {
      return run_pipeline(scenario, config, seed);
    } catch (const Error& e) {
      throw Error("repeat " + std::to_string(r) + " (seed " + std::to_string(seed) + "): " + e.what());
    }
  };

  ExperimentResult out;
  const auto collect = [&](int r, RunResult run) {
    out.per_run.push_back(run.metrics);
    out.seeds.push_back(run.seed);
    out.under_segmented_runs += !run.under_segmented.empty();
    for (const auto& st : run.opt_stats)
      for (std::size_t k = 1; k < st.trace.size(); ++k) {
        ++out.accepted_steps;
        if (st.trace[k] > st.trace[k - 1]) ++out.chi2_increases;
      }
    if (r + 1 == n) out.last = std::move(run);
  };

  // Batches of `workers` repeats; results are folded in repeat order.
  for (int base = 0; base < n; base += workers) {
    const int hi = std::min(n, base + workers);
    if (workers == 1) {
      collect(base, one(base));
      continue;
    }
    std::vector<std::future<RunResult>> jobs;
    for (int r = base; r < hi; ++r) jobs.push_back(std::async(std::launch::async, one, r));
    for (int r = base; r < hi; ++r) collect(r, jobs[static_cast<std::size_t>(r - base)].get());
  }
  out.mean = average(out.per_run);
  return out;
}

}  // namespace tsg
