// Acceptance suite. One PASS/FAIL line per criterion; exit code 1 if any fail.

#include <array>
#include <cstdlib>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tsg/metrics.hpp"
#include "tsg/pipeline.hpp"

using namespace tsg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RunConfig zero_noise_config(const std::string& scenario) {
  RunConfig cfg;
  cfg.scenario = scenario;
  cfg.zero_noise();
  return cfg;
}

int count_in(const std::vector<Vec2>& nodes, const Region& r) {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [&](const Vec2& p) { return r.contains(p); }));
}

// 1. ESDF merges both walkways, traversability keeps them apart.
Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = resolve_scenario("open_corridor");
  const Region& side_a = *s.region("side:A");
  const Region& side_b = *s.region("side:B");

  RunConfig cfg = zero_noise_config("open_corridor");
  cfg.traverses = 1;
  cfg.cluster.backend = ClusterBackend::Esdf;
  const RunResult esdf = run_pipeline(s, cfg, 1);
  cfg.cluster.backend = ClusterBackend::Traversability;
  const RunResult trav = run_pipeline(s, cfg, 1);

  // last keyframe on walkway A: the whole map has been seen by then
  const KeyframeRecord* last_a = nullptr;
  for (const auto& k : esdf.keyframes)
    if (side_a.contains(k.ground_truth.translation()) && !k.cluster.empty()) last_a = &k;
  const int ea = last_a ? count_in(last_a->cluster, side_a) : 0;
  const int eb = last_a ? count_in(last_a->cluster, side_b) : 0;

  int leaks = 0, walkway_kfs = 0;
  for (const auto& k : trav.keyframes) {
    const Vec2 p = k.ground_truth.translation();
    const Region* far = side_a.contains(p) ? &side_b : side_b.contains(p) ? &side_a : nullptr;
    if (!far || k.cluster.empty()) continue;
    ++walkway_kfs;
    leaks += count_in(k.cluster, *far);
  }
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = ea > 0 && eb > 0 && walkway_kfs > 0 && leaks == 0 && dt < 10.0;
  o.detail = fmt("esdf component on walkway A holds %d A-side and %d B-side nodes; traversability: %d far-side nodes over %d walkway keyframes; %.1fs",
                 ea, eb, leaks, walkway_kfs, dt);
  return o;
}

// Distinct robot clusters over the first traverse: keyframe clusters that
// share a node are the same cluster. Degenerate (< 3 node) clusters skipped.
int visited_clusters(const RunResult& run) {
  std::vector<std::set<std::pair<long, long>>> groups;
  for (const auto& k : run.keyframes) {
    if (k.traverse != 0 || k.cluster.size() < 3) continue;
    std::set<std::pair<long, long>> keys;
    for (const auto& p : k.cluster) keys.insert({std::lround(p.x() * 100), std::lround(p.y() * 100)});
    std::vector<std::size_t> hits;
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (std::any_of(keys.begin(), keys.end(), [&](const auto& key) { return groups[g].count(key); })) hits.push_back(g);
    if (hits.empty()) {
      groups.push_back(std::move(keys));
      continue;
    }
    auto& into = groups[hits.front()];
    into.insert(keys.begin(), keys.end());
    for (auto it = hits.rbegin(); it + 1 != hits.rend(); ++it) {
      into.insert(groups[*it].begin(), groups[*it].end());
      groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(*it));
    }
  }
  return static_cast<int>(groups.size());
}

// 2. Doorways split the rooms for both backends; flush finds the four rooms.
Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = resolve_scenario("four_rooms");
  RunConfig cfg = zero_noise_config("four_rooms");
  const RunResult trav = run_pipeline(s, cfg, 1);
  cfg.cluster.backend = ClusterBackend::Esdf;
  const RunResult esdf = run_pipeline(s, cfg, 1);

  const int nt = visited_clusters(trav);
  const int ne = visited_clusters(esdf);
  int matched = 0;
  for (const auto& r : s.regions) {
    if (r.name.rfind("room:", 0) != 0) continue;
    const bool hit = std::any_of(trav.events.begin(), trav.events.end(), [&](const RoomEvent& e) {
      return e.room.kind == RoomKind::FourWall && (e.room.center - r.center()).norm() <= 0.5;
    });
    matched += hit;
  }
  std::set<int> four_ids;
  for (const auto& e : trav.events)
    if (e.room.kind == RoomKind::FourWall) four_ids.insert(e.room.id);
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = nt >= 4 && ne >= 4 && matched >= 4 && static_cast<int>(four_ids.size()) >= 4 && dt < 30.0;
  o.detail = fmt("visited clusters: traversability %d, esdf %d; %zu FOUR_WALL rooms, %d ground-truth rooms matched within 0.5 m; %.1fs",
                 nt, ne, four_ids.size(), matched, dt);
  return o;
}

struct Paired {
  std::vector<MetricsReport> flush, timer;
  std::size_t accepted = 0, increases = 0;
};

// 3. Flush beats timer on re-detection, overlap and center offset.
Outcome criterion3(Paired& all) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* sc : {"four_rooms", "long_corridor"}) {
    for (auto strat : {RoomStrategyKind::Flush, RoomStrategyKind::Timer}) {
      RunConfig cfg;
      cfg.scenario = sc;
      cfg.repeats = 10;
      cfg.seed = 1;
      cfg.rooms.strategy = strat;
      const ExperimentResult exp = run_experiment(cfg);
      auto& into = strat == RoomStrategyKind::Flush ? all.flush : all.timer;
      into.insert(into.end(), exp.per_run.begin(), exp.per_run.end());
      all.accepted += exp.accepted_steps;
      all.increases += exp.chi2_increases;
    }
  }
  const MetricsReport f = average(all.flush);
  const MetricsReport t = average(all.timer);
  const double fd = f.d_center.value_or(NAN), td = t.d_center.value_or(NAN);
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = f.f_re >= 0.8 && f.f_re > t.f_re && f.dcs >= t.dcs && fd <= td && dt < 300.0;
  o.detail = fmt("flush f_re %.3f dcs %.4f d_center %.4f | timer f_re %.3f dcs %.4f d_center %.4f | %zu paired runs, %.1fs", f.f_re, f.dcs,
                 fd, t.f_re, t.dcs, td, all.flush.size(), dt);
  return o;
}

// 4. Zero-noise double traverses are exact.
Outcome criterion4() {
  std::string detail;
  bool pass = true;
  for (const char* sc : {"four_rooms", "long_corridor", "open_corridor"}) {
    const RunResult r = run_pipeline(resolve_scenario(sc), zero_noise_config(sc), 1);
    const auto& m = r.metrics;
    const bool ok = m.f_re == 1.0 && m.dcs == 1.0 && m.d_center && *m.d_center == 0.0;
    pass = pass && ok;
    detail += fmt("%s f_re=%g dcs=%g d_center=%g; ", sc, m.f_re, m.dcs, m.d_center.value_or(NAN));
  }
  return {pass, detail};
}

// 5. Jacobians, dense oracle, monotone chi2.
Outcome criterion5(const Paired& runs) {
  std::mt19937_64 rng(5);
  double worst_jac = 0.0;
  int factors = 0;
  for (int g = 0; g < 100; ++g) {
    const FactorGraph graph = oracle::random_small_graph(rng, g % 2 == 0);
    for (const auto& f : graph.factors) {
      const FactorLinearization lin = linearize(f, graph);
      for (const auto& [v, Ja] : lin.blocks) {
        const Eigen::MatrixXd Jn = oracle::numeric_block(f, graph, v);
        worst_jac = std::max(worst_jac, (Ja - Jn).norm() / std::max(Jn.norm(), 1e-12));
      }
      ++factors;
    }
  }

  double worst_lm = 0.0;
  for (int g = 0; g < 50; ++g) {
    FactorGraph a = oracle::random_small_graph(rng, g % 2 == 0);
    FactorGraph b = a;
    OptimizerConfig oc;
    oc.max_iters = 200;
    oc.eps = 1e-15;
    optimize(a, oc);
    oracle::dense_solve(b);
    worst_lm = std::max(worst_lm, (oracle::state(a) - oracle::state(b)).cwiseAbs().maxCoeff());
  }

  Outcome o;
  o.pass = factors >= 100 && worst_jac < 1e-6 && worst_lm < 1e-6 && runs.accepted > 0 && runs.increases == 0;
  o.detail = fmt("(a) max relative jacobian error %.2e over %d factors; (b) max |LM - dense| %.2e over 50 graphs; (c) %zu chi2 increases in %zu accepted steps",
                 worst_jac, factors, worst_lm, runs.increases, runs.accepted);
  return o;
}

// 6. Total optimization time, flush vs timer, median of 5 paired runs.
Outcome criterion6() {
  const Scenario s = resolve_scenario("four_rooms");
  RunConfig flush;
  flush.scenario = "four_rooms";
  flush.timing = true;
  RunConfig timer = flush;
  timer.rooms.strategy = RoomStrategyKind::Timer;
  std::vector<double> tf, tt, diff;
  for (int k = 0; k < 5; ++k) {
    // keyframes of the two runs alternate, and so does which one goes first
    const auto [rf, rt] = run_pipeline_lockstep(s, flush, timer, 1, k % 2 == 1);
    tf.push_back(rf.metrics.t_pgo_total);
    tt.push_back(rt.metrics.t_pgo_total);
    diff.push_back(tf.back() - tt.back());
  }
  const double md = median(diff);
  return {md <= 0.0, fmt("median paired T_PGO difference flush - timer %+.3fs (medians flush %.3fs, timer %.3fs)", md,
                         median(tf), median(tt))};
}

// 7. Room re-detection closes the loop on open_corridor.
Outcome criterion7() {
  RunConfig cfg;
  cfg.scenario = "open_corridor";
  cfg.repeats = 10;
  cfg.seed = 1;
  const ExperimentResult exp = run_experiment(cfg);
  std::vector<double> ate, dr;
  for (const auto& m : exp.per_run) {
    ate.push_back(m.ate);
    dr.push_back(m.ate_dead_reckoning);
  }
  const double ma = median(ate), md = median(dr);
  return {ma <= 0.5 * md, fmt("median start/end ATE %.4f m vs dead reckoning %.4f m (ratio %.3f)", ma, md, ma / md)};
}

// 8. Metric examples.
Outcome criterion8() {
  RoomFootprint a{{0.5, 0.5}, 0.0, 1.0, 1.0};
  RoomFootprint b{{1.0, 0.5}, 0.0, 1.0, 1.0};
  RoomFootprint far{{5.0, 5.0}, 0.0, 1.0, 1.0};
  const double same = dcs(a, a), none = dcs(a, far), half = dcs(a, b);
  const double f1 = f_re(5.3, 10.5), f2 = f_re(4.0, 4.7);
  const bool r1 = std::round(f1 * 100) / 100 == 0.50, r2 = std::round(f2 * 100) / 100 == 0.85;
  return {same == 1.0 && none == 0.0 && std::abs(half - 0.5) < 1e-12 && r1 && r2,
          fmt("dcs %g / %g / %.12g; f_re %.4f -> 0.50, %.4f -> 0.85", same, none, half, f1, f2)};
}

// 9. Geometry properties over 10^4 random cases each.
Outcome criterion9() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-10.0, 10.0), ang(-kPi, kPi);
  const auto pose = [&] { return Pose2(u(rng), u(rng), ang(rng)); };
  const auto close = [](const Pose2& a, const Pose2& b, double tol) {
    return std::abs(a.x - b.x) < tol && std::abs(a.y - b.y) < tol && std::abs(wrap_angle(a.theta - b.theta)) < tol;
  };
  const int n = 10000;
  int fail = 0;
  for (int k = 0; k < n; ++k) {
    const Pose2 a = pose(), b = pose(), c = pose();
    fail += !close(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-12);
    fail += !close(compose(a, Pose2::identity()), a, 1e-12) || !close(compose(Pose2::identity(), a), a, 1e-12);
    fail += !close(compose(a, inverse(a)), Pose2::identity(), 1e-12) || !close(compose(inverse(a), a), Pose2::identity(), 1e-12);
    fail += !(a.theta > -kPi && a.theta <= kPi);

    const Line2 raw(ang(rng), u(rng));
    const Line2 l = canonicalize(raw);
    const Line2 cc = canonicalize(l);
    const Line2 flip = canonicalize(Line2(raw.theta_n + kPi, -raw.d));
    fail += !(cc.theta_n == l.theta_n && cc.d == l.d && l.d >= 0.0);
    fail += !(std::abs(wrap_angle(flip.theta_n - l.theta_n)) < 1e-12 && std::abs(flip.d - l.d) < 1e-12);
    const Line2 back = canonicalize(line_to_frame(a, line_to_world(a, l)));
    fail += !(std::abs(wrap_angle(back.theta_n - l.theta_n)) < 1e-12 && std::abs(back.d - l.d) < 1e-12);
  }
  return {fail == 0, fmt("%d failures over %d cases x 7 properties at 1e-12", fail, n)};
}

}  // namespace

// Optional arguments pick criteria by number; none runs all of them.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));
  Paired runs;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, [&] { return criterion3(runs); }}, {4, criterion4},
      {5, [&] { return criterion5(runs); }}, {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
  };
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
