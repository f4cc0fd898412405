#include "tsg/rooms.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Dense>

#include "tsg/errors.hpp"

namespace tsg {

std::string to_string(RoomKind k) { return k == RoomKind::FourWall ? "FOUR_WALL" : "TWO_WALL"; }

std::string to_string(RoomStrategyKind s) { return s == RoomStrategyKind::Flush ? "flush" : "timer"; }

RoomStrategyKind parse_strategy(std::string_view s) {
  if (s == "flush") return RoomStrategyKind::Flush;
  if (s == "timer") return RoomStrategyKind::Timer;
  throw ConfigError("unknown room strategy: " + std::string(s));
}

void RoomsConfig::validate() const {
  if (!(tau_w > 0.0) || !(tau_psi_deg > 0.0)) throw ConfigError("rooms flush thresholds must be positive");
  if (!(timer_interval > 0.0)) throw ConfigError("rooms.timer_interval must be positive");
  if (!(rho >= 0.0)) throw ConfigError("rooms.rho must be non-negative");
  if (!(assoc_center_dist > 0.0)) throw ConfigError("rooms.assoc_center_dist must be positive");
}

RoomFootprint footprint(const Room& r) {
  if (r.kind == RoomKind::FourWall) return {r.center, r.axis, r.extents.first, r.extents.second};
  const double len = r.span.second - r.span.first;
  if (!(len > 0.0) || !std::isfinite(len)) throw UnboundedRoom("room " + std::to_string(r.id) + " has no observed span");
  const Vec2 c = r.center + 0.5 * (r.span.first + r.span.second) * r.across_dir();
  return {c, r.axis, r.extents.first, len};
}

void FlushState::clear() {
  nodes.clear();
  wall_ids.clear();
  keyframes.clear();
}

void FlushState::add_nodes(const std::vector<Vec2>& pts) {
  for (const auto& p : pts) nodes.try_emplace({std::lround(p.x() * 100.0), std::lround(p.y() * 100.0)}, p);
}

bool should_flush(const FlushState& state, double width, double axis) {
  if (!state.initialized) return false;
  return std::abs(width - state.last_width) > state.tau_w || axis_distance(axis, state.last_axis) > state.tau_psi;
}

namespace {

struct Candidate {
  int id;
  Line2 line;  // oriented toward the wall from the observed side
  double e0, e1;
};

struct Pair {
  std::size_t a, b;  // indices into candidates
  std::vector<Vec2> between;
};

bool inside_extent(const Candidate& c, const Vec2& p, double margin) {
  const double s = p.dot(c.line.tangent());
  return s >= c.e0 - margin && s <= c.e1 + margin;
}

double midline(const Candidate& a, const Candidate& b) { return 0.5 * (a.line.d - b.line.d); }
double separation(const Candidate& a, const Candidate& b) { return a.line.d + b.line.d; }

}  // namespace

std::optional<Room> extract_room(const std::vector<Vec2>& nodes, const std::vector<WallLandmark>& landmarks,
                                 const RoomsConfig& cfg) {
  if (nodes.empty()) return std::nullopt;
  const double reach = cfg.rho + cfg.node_clearance;

  std::vector<Candidate> cands;
  for (const auto& lm : landmarks) {
    const bool near = std::any_of(nodes.begin(), nodes.end(), [&](const Vec2& p) { return distance_to_segment(lm, p) <= reach; });
    if (!near) continue;
    const auto [e0, e1] = lm.extent();
    cands.push_back({lm.id, lm.oriented(), e0, e1});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) { return x.id < y.id; });

  const double pair_tol = deg2rad(cfg.pair_angle_deg);
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < cands.size(); ++i)
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      const auto& a = cands[i];
      const auto& b = cands[j];
      if (std::abs(wrap_angle(a.line.theta_n - b.line.theta_n - kPi)) >= pair_tol) continue;
      Pair p{i, j, {}};
      for (const auto& n : nodes)
        if (a.line.signed_distance(n) < 0.0 && b.line.signed_distance(n) < 0.0 && inside_extent(a, n, cfg.extent_margin) &&
            inside_extent(b, n, cfg.extent_margin))
          p.between.push_back(n);
      if (static_cast<int>(p.between.size()) >= cfg.min_pair_support) pairs.push_back(std::move(p));
    }
  if (pairs.empty()) return std::nullopt;

  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.between.size() > y.between.size(); });
  const Pair& best = pairs.front();

  const double perp_min = kPi / 2.0 - deg2rad(cfg.perp_tol_deg);
  const Pair* second = nullptr;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const Pair& p = pairs[k];
    if (p.a == best.a || p.a == best.b || p.b == best.a || p.b == best.b) continue;
    if (axis_distance(cands[p.a].line.theta_n, cands[best.a].line.theta_n) < perp_min) continue;
    if (static_cast<double>(p.between.size()) < cfg.perp_score_ratio * static_cast<double>(best.between.size())) continue;
    second = &p;
    break;
  }

  Room room;
  if (second) {
    const Pair* first = &best;
    if (wrap_axis(cands[second->a].line.theta_n) < wrap_axis(cands[first->a].line.theta_n)) std::swap(first, second);
    const auto& a1 = cands[first->a];
    const auto& b1 = cands[first->b];
    const auto& a2 = cands[second->a];
    const auto& b2 = cands[second->b];
    Eigen::Matrix2d A;
    A.row(0) = a1.line.normal().transpose();
    A.row(1) = a2.line.normal().transpose();
    const Eigen::Vector2d m{midline(a1, b1), midline(a2, b2)};
    room.kind = RoomKind::FourWall;
    room.center = A.partialPivLu().solve(m);
    room.axis = wrap_axis(a1.line.theta_n);
    room.extents = {separation(a1, b1), separation(a2, b2)};
    room.wall_ids = {a1.id, b1.id, a2.id, b2.id};
  } else {
    const auto& a = cands[best.a];
    const auto& b = cands[best.b];
    const Vec2 n = a.line.normal();
    Vec2 g = Vec2::Zero();
    for (const auto& p : best.between) g += p;
    g /= static_cast<double>(best.between.size());
    room.kind = RoomKind::TwoWall;
    room.center = g - (g.dot(n) - midline(a, b)) * n;
    room.axis = wrap_axis(a.line.theta_n);
    room.extents = {separation(a, b), kUnbounded};
    room.wall_ids = {a.id, b.id};
    const Vec2 t = room.across_dir();
    double s0 = kUnbounded, s1 = -kUnbounded;
    for (const auto& p : best.between) {
      const double s = (p - room.center).dot(t);
      s0 = std::min(s0, s);
      s1 = std::max(s1, s);
    }
    room.span = {s0, s1};
  }
  return room;
}

std::optional<Room> extract_room(const FreeSpaceCluster& cluster, const std::vector<WallLandmark>& landmarks,
                                 const RoomsConfig& cfg) {
  return extract_room(cluster.nodes, landmarks, cfg);
}

bool rooms_compatible(const Room& a, const Room& b, const RoomsConfig& cfg) {
  if (a.kind != b.kind) return false;
  if ((a.center - b.center).norm() >= cfg.assoc_center_dist) return false;
  double dax = axis_distance(a.axis, b.axis);
  if (a.kind == RoomKind::FourWall) dax = std::min(dax, axis_distance(a.axis, b.axis + kPi / 2.0));
  return dax < deg2rad(cfg.assoc_axis_deg);
}

std::optional<int> associate_room(const Room& candidate, const std::vector<Room>& rooms, const RoomsConfig& cfg) {
  std::optional<int> best;
  double best_d = kUnbounded;
  for (const auto& r : rooms) {
    if (!rooms_compatible(candidate, r, cfg)) continue;
    const double d = (candidate.center - r.center).norm();
    if (d < best_d) {
      best_d = d;
      best = r.id;
    }
  }
  return best;
}

nlohmann::json room_to_json(const Room& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["kind"] = to_string(r.kind);
  j["center"] = {r.center.x(), r.center.y()};
  j["axis"] = r.axis;
  j["extents"] = {r.extents.first, std::isfinite(r.extents.second) ? nlohmann::json(r.extents.second) : nlohmann::json("UNBOUNDED")};
  j["wall_ids"] = r.wall_ids;
  if (r.kind == RoomKind::TwoWall) j["span"] = {r.span.first, r.span.second};
  return j;
}

nlohmann::json room_event_json(const RoomEvent& e) {
  nlohmann::json j = room_to_json(e.room);
  j["t"] = e.t;
  j["keyframe"] = e.keyframe;
  j["traverse"] = e.traverse;
  j["redetected"] = e.redetected;
  return j;
}

RoomStrategy::RoomStrategy(const RoomsConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  state_.tau_w = cfg.tau_w;
  state_.tau_psi = deg2rad(cfg.tau_psi_deg);
}

std::optional<Room> RoomStrategy::flush(const std::vector<WallLandmark>& landmarks) {
  if (state_.empty()) {
    state_.clear();
    return std::nullopt;
  }
  std::vector<Vec2> nodes;
  nodes.reserve(state_.nodes.size());
  for (const auto& [key, p] : state_.nodes) nodes.push_back(p);
  auto room = extract_room(nodes, landmarks, cfg_);
  if (room) room->keyframes = state_.keyframes;
  state_.clear();
  return room;
}

std::optional<Room> RoomStrategy::step(const KeyframeInput& in, const std::vector<WallLandmark>& landmarks) {
  std::optional<Room> out;
  if (cfg_.strategy == RoomStrategyKind::Flush) {
    if (in.aisle) {
      bool reset = !state_.initialized;
      if (state_.initialized && should_flush(state_, in.aisle->width, in.aisle->axis)) {
        out = flush(landmarks);
        reset = true;
      }
      state_.initialized = true;
      if (reset) {
        state_.last_width = in.aisle->width;
        state_.last_axis = in.aisle->axis;
      }
    }
    state_.add_nodes(in.nodes);
    state_.wall_ids.insert(in.observed_walls.begin(), in.observed_walls.end());
    state_.keyframes.push_back(in.keyframe);
    return out;
  }

  state_.add_nodes(in.nodes);
  state_.wall_ids.insert(in.observed_walls.begin(), in.observed_walls.end());
  state_.keyframes.push_back(in.keyframe);
  if (!last_flush_t_) last_flush_t_ = in.t;
  if (in.t - *last_flush_t_ >= cfg_.timer_interval - 1e-9) {
    out = flush(landmarks);
    last_flush_t_ = in.t;
  }
  return out;
}

std::optional<Room> RoomStrategy::end_traverse(const std::vector<WallLandmark>& landmarks) {
  if (cfg_.strategy != RoomStrategyKind::Flush) return std::nullopt;
  auto out = flush(landmarks);
  state_.initialized = false;
  return out;
}

std::vector<Room> run_room_strategy(const RoomsConfig& cfg, const std::vector<KeyframeInput>& stream,
                                    const std::vector<WallLandmark>& landmarks) {
  RoomStrategy strategy(cfg);
  std::vector<Room> out;
  double last_t = -kUnbounded;
  for (const auto& in : stream) {
    if (in.t < last_t) throw ValidationError("keyframe timestamps must be monotone");
    last_t = in.t;
    if (auto r = strategy.step(in, landmarks)) out.push_back(*r);
  }
  if (auto r = strategy.end_traverse(landmarks)) out.push_back(*r);
  return out;
}

}  // namespace tsg
