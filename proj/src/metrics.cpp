#include "tsg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsg/errors.hpp"

namespace tsg {

std::vector<Vec2> rectangle_corners(const RoomFootprint& r) {
  const Vec2 u{std::cos(r.axis), std::sin(r.axis)};
  const Vec2 v{-u.y(), u.x()};
  const Vec2 a = 0.5 * r.len_a * u;
  const Vec2 b = 0.5 * r.len_b * v;
  return {r.center - a - b, r.center + a - b, r.center + a + b, r.center - a + b};
}

double polygon_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2& p = poly[k];
    const Vec2& q = poly[(k + 1) % poly.size()];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(s);
}

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

std::vector<Vec2> clip(const std::vector<Vec2>& subject, const Vec2& a, const Vec2& b) {
  std::vector<Vec2> out;
  const auto side = [&](const Vec2& p) { return cross(b - a, p - a); };
  for (std::size_t k = 0; k < subject.size(); ++k) {
    const Vec2& p = subject[k];
    const Vec2& q = subject[(k + 1) % subject.size()];
    const double sp = side(p);
    const double sq = side(q);
    if (sp >= 0.0) out.push_back(p);
    if ((sp >= 0.0) != (sq >= 0.0)) out.push_back(p + (sp / (sp - sq)) * (q - p));
  }
  return out;
}

}  // namespace

double intersection_area(const RoomFootprint& a, const RoomFootprint& b) {
  std::vector<Vec2> poly = rectangle_corners(a);
  const std::vector<Vec2> clipper = rectangle_corners(b);
  for (std::size_t k = 0; k < clipper.size() && !poly.empty(); ++k) poly = clip(poly, clipper[k], clipper[(k + 1) % clipper.size()]);
  return poly.size() < 3 ? 0.0 : polygon_area(poly);
}

double dcs(const RoomFootprint& a, const RoomFootprint& b) {
  if (a.center == b.center && a.axis == b.axis && a.len_a == b.len_a && a.len_b == b.len_b) return 1.0;
  const double total = a.area() + b.area();
  if (!(total > 0.0)) return 0.0;
  // Average both clipping orders so the score is exactly symmetric.
  const double inter = 0.5 * (intersection_area(a, b) + intersection_area(b, a));
  return std::clamp(2.0 * inter / total, 0.0, 1.0);
}

double dcs(const Room& a, const Room& b) { return dcs(footprint(a), footprint(b)); }

MatchResult match_traverses(const std::vector<Room>& first, const std::vector<Room>& second, const RoomsConfig* gate) {
  struct Cand {
    std::size_t i, j;
    double score;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < first.size(); ++i)
    for (std::size_t j = 0; j < second.size(); ++j) {
      if (gate && !rooms_compatible(first[i], second[j], *gate)) continue;
      const double s = dcs(first[i], second[j]);
      if (s > 0.0) cands.push_back({i, j, s});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.score > y.score; });

  MatchResult out;
  std::vector<bool> used_a(first.size(), false), used_b(second.size(), false);
  for (const auto& c : cands) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = true;
    out.pairs.push_back({c.i, c.j, c.score, (first[c.i].center - second[c.j].center).norm()});
  }
  out.n_re = static_cast<int>(out.pairs.size());
  if (!out.pairs.empty()) {
    double sum = 0.0;
    for (const auto& p : out.pairs) sum += p.dcs;
    out.dcs_mean = sum / static_cast<double>(out.pairs.size());
    out.dcs_best = out.pairs.front().dcs;
    out.d_center = out.pairs.front().center_distance;
  }
  return out;
}

double f_re(double n_re, double n_first) { return n_first > 0.0 ? n_re / n_first : 0.0; }

double start_end_ate(const std::vector<Pose2>& traj) {
  if (traj.empty()) return 0.0;
  return (traj.back().translation() - traj.front().translation()).norm();
}

double translation_rmse(const std::vector<Pose2>& est, const std::vector<Pose2>& gt) {
  if (est.size() != gt.size()) throw ValidationError("trajectory lengths differ");
  if (est.empty()) return 0.0;
  double ss = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) ss += (est[k].translation() - gt[k].translation()).squaredNorm();
  return std::sqrt(ss / static_cast<double>(est.size()));
}

MetricsReport compute_metrics(const RunArtifacts& run, const RoomsConfig* gate) {
  if (run.ground_truth.empty() || (run.ground_truth.front().translation() - run.ground_truth.back().translation()).norm() > 1e-9)
    throw OpenTrajectory("ground-truth trajectory does not end at its start");
  MetricsReport m;
  const MatchResult match = match_traverses(run.rooms_first, run.rooms_second, gate);
  m.n_first = static_cast<double>(run.rooms_first.size());
  m.n_second = static_cast<double>(run.rooms_second.size());
  m.n_re = match.n_re;
  m.f_re = f_re(m.n_re, m.n_first);
  m.dcs = match.dcs_mean;
  m.dcs_best = match.dcs_best;
  m.d_center = match.d_center;
  m.ate = start_end_ate(run.estimated);
  m.ate_dead_reckoning = start_end_ate(run.dead_reckoning);
  m.ate_rmse = run.estimated.size() == run.ground_truth.size() ? translation_rmse(run.estimated, run.ground_truth) : 0.0;
  for (double t : run.pgo_times) m.t_pgo_total += t;
  m.t_pgo_mean = run.pgo_times.empty() ? 0.0 : m.t_pgo_total / static_cast<double>(run.pgo_times.size());
  return m;
}

MetricsReport average(const std::vector<MetricsReport>& runs) {
  MetricsReport m;
  if (runs.empty()) return m;
  const double n = static_cast<double>(runs.size());
  double dc_sum = 0.0;
  int dc_n = 0;
  m.runs = static_cast<int>(runs.size());
  m.n_first = m.n_second = m.n_re = m.f_re = m.dcs = m.dcs_best = 0.0;
  for (const auto& r : runs) {
    m.n_first += r.n_first / n;
    m.n_second += r.n_second / n;
    m.n_re += r.n_re / n;
    m.f_re += r.f_re / n;
    m.dcs += r.dcs / n;
    m.dcs_best += r.dcs_best / n;
    m.ate += r.ate / n;
    m.ate_dead_reckoning += r.ate_dead_reckoning / n;
    m.ate_rmse += r.ate_rmse / n;
    m.t_pgo_total += r.t_pgo_total / n;
    m.t_pgo_mean += r.t_pgo_mean / n;
    if (r.d_center) {
      dc_sum += *r.d_center;
      ++dc_n;
    }
  }
  if (dc_n > 0) m.d_center = dc_sum / dc_n;
  return m;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["N1st"] = n_first;
  j["N2nd"] = n_second;
  j["Nre"] = n_re;
  j["f_re"] = f_re;
  j["dcs_mean"] = dcs;
  j["dcs_best"] = dcs_best;
  j["d_center"] = d_center ? nlohmann::json(*d_center) : nlohmann::json(nullptr);
  j["ATE"] = ate;
  j["ATE_dead_reckoning"] = ate_dead_reckoning;
  j["ate_rmse"] = ate_rmse;
  j["T_PGO"] = t_pgo_total;
  j["T_PGO_mean"] = t_pgo_mean;
  j["runs"] = runs;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport m;
  try {
    m.n_first = j.at("N1st").get<double>();
    m.n_second = j.at("N2nd").get<double>();
    m.n_re = j.at("Nre").get<double>();
    m.f_re = j.at("f_re").get<double>();
    m.dcs = j.at("dcs_mean").get<double>();
    m.dcs_best = j.at("dcs_best").get<double>();
    if (!j.at("d_center").is_null()) m.d_center = j.at("d_center").get<double>();
    m.ate = j.at("ATE").get<double>();
    m.ate_dead_reckoning = j.value("ATE_dead_reckoning", 0.0);
    m.ate_rmse = j.value("ate_rmse", 0.0);
    m.t_pgo_total = j.at("T_PGO").get<double>();
    m.t_pgo_mean = j.value("T_PGO_mean", 0.0);
    m.runs = j.value("runs", 1);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("metrics: ") + e.what());
  }
  return m;
}

}  // namespace tsg
