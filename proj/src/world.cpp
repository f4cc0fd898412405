#include "tsg/world.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tsg/errors.hpp"

namespace tsg {

namespace {

constexpr double kWaypointSpacing = 0.5;

// Builds ground grid and bookkeeping for a w x h world made of GROUND cells.
Scenario make_empty(std::string name, double width, double height, double cell) {
  Scenario s;
  s.name = std::move(name);
  s.cell_size = cell;
  s.width = width;
  s.height = height;
  s.nx = static_cast<int>(std::lround(width / cell));
  s.ny = static_cast<int>(std::lround(height / cell));
  s.ground.assign(static_cast<std::size_t>(s.nx) * s.ny, GroundKind::Ground);
  return s;
}

void fill_void(Scenario& s, const Vec2& lo, const Vec2& hi) {
  const int i0 = static_cast<int>(std::lround(lo.x() / s.cell_size));
  const int i1 = static_cast<int>(std::lround(hi.x() / s.cell_size));
  const int j0 = static_cast<int>(std::lround(lo.y() / s.cell_size));
  const int j1 = static_cast<int>(std::lround(hi.y() / s.cell_size));
  for (int j = j0; j < j1; ++j)
    for (int i = i0; i < i1; ++i) s.ground[static_cast<std::size_t>(j) * s.nx + i] = GroundKind::Void;
}

void wall(Scenario& s, Vec2 a, Vec2 b) { s.obstacles.push_back({a, b, 0.0, kWallHeight}); }
void rail(Scenario& s, Vec2 a, Vec2 b) { s.obstacles.push_back({a, b, 0.0, kRailHeight}); }

// Samples a polyline every kWaypointSpacing; every leg length must be a
// multiple of the spacing so corners and the end point are hit exactly.
std::vector<Pose2> sample_path(const std::vector<Vec2>& pts) {
  std::vector<Pose2> out;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const Vec2 a = pts[k];
    const Vec2 b = pts[k + 1];
    const double len = (b - a).norm();
    const double heading = std::atan2(b.y() - a.y(), b.x() - a.x());
    const int steps = static_cast<int>(std::lround(len / kWaypointSpacing));
    for (int i = 0; i < steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      out.emplace_back(a.x() + t * (b.x() - a.x()), a.y() + t * (b.y() - a.y()), heading);
    }
  }
  const Vec2 last = pts.back();
  const Vec2 prev = pts[pts.size() - 2];
  out.emplace_back(last.x(), last.y(), std::atan2(last.y() - prev.y(), last.x() - prev.x()));
  return out;
}

Scenario four_rooms() {
  Scenario s = make_empty("four_rooms", 17.0, 7.0, 0.2);
  // Row of four rooms with alternating proportions, 0.8 m doorways at y in [2.2, 3.0].
  wall(s, {1.0, 1.0}, {16.0, 1.0});
  wall(s, {1.0, 1.0}, {1.0, 4.0});
  wall(s, {16.0, 1.0}, {16.0, 6.0});
  wall(s, {1.0, 4.0}, {5.0, 4.0});
  wall(s, {5.0, 6.0}, {8.0, 6.0});
  wall(s, {8.0, 4.0}, {13.0, 4.0});
  wall(s, {13.0, 6.0}, {16.0, 6.0});
  for (double x : {5.0, 8.0, 13.0}) {
    wall(s, {x, 1.0}, {x, 2.2});
    wall(s, {x, 3.0}, {x, 6.0});
  }
  s.regions = {
      {"room:R1", {1.0, 1.0}, {5.0, 4.0}},
      {"room:R2", {5.0, 1.0}, {8.0, 6.0}},
      {"room:R3", {8.0, 1.0}, {13.0, 4.0}},
      {"room:R4", {13.0, 1.0}, {16.0, 6.0}},
  };
  // Short back-and-forth in R1 so the start room is seen in full before leaving it,
  // and detours into the deep part of R2 and R4.
  s.trajectory = sample_path({{2.0, 2.6}, {4.0, 2.6}, {2.0, 2.6}, {6.5, 2.6}, {6.5, 4.6}, {6.5, 2.6},
                              {14.5, 2.6}, {14.5, 4.6}, {14.5, 2.6}, {6.5, 2.6}, {6.5, 4.6}, {6.5, 2.6}, {2.0, 2.6}});
  return s;
}

Scenario long_corridor() {
  Scenario s = make_empty("long_corridor", 16.0, 12.0, 0.2);
  // 2 m wide leg, widening to 4 m at x = 9, then a 90 degree bend north.
  wall(s, {1.0, 2.0}, {9.0, 2.0});
  wall(s, {1.0, 4.0}, {9.0, 4.0});
  wall(s, {1.0, 2.0}, {1.0, 4.0});
  wall(s, {9.0, 1.0}, {9.0, 2.0});
  wall(s, {9.0, 4.0}, {9.0, 5.0});
  wall(s, {9.0, 1.0}, {15.0, 1.0});
  wall(s, {15.0, 1.0}, {15.0, 11.0});
  wall(s, {9.0, 5.0}, {11.0, 5.0});
  wall(s, {11.0, 5.0}, {11.0, 11.0});
  wall(s, {11.0, 11.0}, {15.0, 11.0});
  s.regions = {
      {"room:narrow", {1.0, 2.0}, {9.0, 4.0}},
      {"room:wide", {9.0, 1.0}, {15.0, 5.0}},
      {"room:bend", {11.0, 5.0}, {15.0, 11.0}},
  };
  s.trajectory = sample_path({{2.0, 3.0}, {4.0, 3.0}, {2.0, 3.0}, {13.0, 3.0}, {13.0, 10.0}, {13.0, 3.0}, {2.0, 3.0}});
  return s;
}

Scenario open_corridor() {
  Scenario s = make_empty("open_corridor", 13.0, 9.0, 0.2);
  // Two 2 m walkways flanking a 3 m hollow, joined through a connector room
  // behind 0.8 m doorways at x = 9.
  fill_void(s, {1.0, 3.0}, {9.0, 6.0});
  wall(s, {1.0, 1.0}, {12.0, 1.0});
  wall(s, {1.0, 8.0}, {12.0, 8.0});
  wall(s, {1.0, 1.0}, {1.0, 8.0});
  wall(s, {12.0, 1.0}, {12.0, 8.0});
  wall(s, {9.0, 1.0}, {9.0, 1.6});
  wall(s, {9.0, 2.4}, {9.0, 6.6});
  wall(s, {9.0, 7.4}, {9.0, 8.0});
  rail(s, {1.0, 3.0}, {9.0, 3.0});
  rail(s, {1.0, 6.0}, {9.0, 6.0});
  rail(s, {9.0, 3.0}, {9.0, 6.0});
  s.regions = {
      {"side:A", {1.0, 1.0}, {9.0, 3.0}},
      {"side:B", {1.0, 6.0}, {9.0, 8.0}},
      {"connector", {9.0, 1.0}, {12.0, 8.0}},
      {"hollow", {1.0, 3.0}, {9.0, 6.0}},
  };
  const std::vector<Vec2> out{{2.0, 2.0}, {10.5, 2.0}, {10.5, 7.0}, {2.0, 7.0}};
  std::vector<Vec2> loop = out;
  for (auto it = out.rbegin() + 1; it != out.rend(); ++it) loop.push_back(*it);
  s.trajectory = sample_path(loop);
  return s;
}

std::string encode_row(const Scenario& s, int j) {
  std::string out;
  int i = 0;
  while (i < s.nx) {
    const GroundKind k = s.cell(i, j);
    int run = 0;
    while (i < s.nx && s.cell(i, j) == k) {
      ++i;
      ++run;
    }
    out += std::to_string(run);
    out += (k == GroundKind::Ground ? 'G' : 'V');
  }
  return out;
}

void decode_row(const std::string& row, int nx, std::vector<GroundKind>& out) {
  std::size_t start = out.size();
  std::size_t pos = 0;
  while (pos < row.size()) {
    std::size_t digits = pos;
    while (digits < row.size() && std::isdigit(static_cast<unsigned char>(row[digits]))) ++digits;
    if (digits == pos || digits >= row.size()) throw SchemaError("malformed ground row: " + row);
    const int run = std::stoi(row.substr(pos, digits - pos));
    const char kind = row[digits];
    if (kind != 'G' && kind != 'V') throw SchemaError("unknown ground kind in row: " + row);
    out.insert(out.end(), static_cast<std::size_t>(run), kind == 'G' ? GroundKind::Ground : GroundKind::Void);
    pos = digits + 1;
  }
  if (out.size() - start != static_cast<std::size_t>(nx)) throw SchemaError("ground row width mismatch: " + row);
}

template <typename T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing field: ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad field ") + key + ": " + e.what());
  }
}

Vec2 vec_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw SchemaError("expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::optional<GroundKind> Scenario::ground_at(const Vec2& p) const {
  if (p.x() < 0.0 || p.y() < 0.0) return std::nullopt;
  const int i = static_cast<int>(std::floor(p.x() / cell_size));
  const int j = static_cast<int>(std::floor(p.y() / cell_size));
  if (i >= nx || j >= ny) return std::nullopt;
  return cell(i, j);
}

const Region* Scenario::region_at(const Vec2& p, std::string_view prefix) const {
  for (const auto& r : regions)
    if (r.name.starts_with(prefix) && r.contains(p)) return &r;
  return nullptr;
}

const Region* Scenario::region(std::string_view name) const {
  for (const auto& r : regions)
    if (r.name == name) return &r;
  return nullptr;
}

void Scenario::validate() const {
  if (!(cell_size > 0.0)) throw ValidationError("cell_size must be positive");
  if (!(width > 0.0) || !(height > 0.0)) throw ValidationError("extent must be positive");
  if (ground.size() != static_cast<std::size_t>(nx) * ny) throw ValidationError("ground grid size mismatch");
  for (const auto& o : obstacles) {
    if (!(o.z_low < o.z_high)) throw ValidationError("obstacle z_low must be below z_high");
    if (!(o.length() > 0.0)) throw ValidationError("obstacle segment has zero length");
  }
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    if (!is_ground(trajectory[k].translation()))
      throw ValidationError("waypoint " + std::to_string(k) + " is not on a GROUND cell");
  }
}

std::optional<CanonicalScenario> parse_canonical(std::string_view name) {
  if (name == "four_rooms") return CanonicalScenario::FourRooms;
  if (name == "long_corridor") return CanonicalScenario::LongCorridor;
  if (name == "open_corridor") return CanonicalScenario::OpenCorridor;
  return std::nullopt;
}

std::string to_string(CanonicalScenario s) {
  switch (s) {
    case CanonicalScenario::FourRooms: return "four_rooms";
    case CanonicalScenario::LongCorridor: return "long_corridor";
    case CanonicalScenario::OpenCorridor: return "open_corridor";
  }
  return "unknown";
}

Scenario build_canonical(CanonicalScenario which) {
  Scenario s;
  switch (which) {
    case CanonicalScenario::FourRooms: s = four_rooms(); break;
    case CanonicalScenario::LongCorridor: s = long_corridor(); break;
    case CanonicalScenario::OpenCorridor: s = open_corridor(); break;
  }
  s.validate();
  return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["cell_size"] = s.cell_size;
  j["extent"] = {s.width, s.height};
  auto& rows = j["ground_rows"] = nlohmann::json::array();
  for (int r = 0; r < s.ny; ++r) rows.push_back(encode_row(s, r));
  auto& obs = j["obstacles"] = nlohmann::json::array();
  for (const auto& o : s.obstacles)
    obs.push_back({{"p0", {o.p0.x(), o.p0.y()}}, {"p1", {o.p1.x(), o.p1.y()}}, {"z_low", o.z_low}, {"z_high", o.z_high}});
  auto& traj = j["trajectory"] = nlohmann::json::array();
  for (const auto& p : s.trajectory) traj.push_back({{"x", p.x}, {"y", p.y}, {"theta", p.theta}});
  j["rng_seed"] = s.rng_seed;
  auto& regions = j["regions"] = nlohmann::json::array();
  for (const auto& r : s.regions)
    regions.push_back({{"name", r.name}, {"min", {r.min.x(), r.min.y()}}, {"max", {r.max.x(), r.max.y()}}});
  return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.name = require<std::string>(j, "name");
  s.cell_size = require<double>(j, "cell_size");
  const auto extent = require<std::vector<double>>(j, "extent");
  if (extent.size() != 2) throw SchemaError("extent must be [width, height]");
  s.width = extent[0];
  s.height = extent[1];
  if (!(s.cell_size > 0.0)) throw ValidationError("cell_size must be positive");
  if (!(s.width > 0.0) || !(s.height > 0.0)) throw ValidationError("extent must be positive");
  s.nx = static_cast<int>(std::lround(s.width / s.cell_size));
  s.ny = static_cast<int>(std::lround(s.height / s.cell_size));

  const auto rows = require<std::vector<std::string>>(j, "ground_rows");
  if (rows.size() != static_cast<std::size_t>(s.ny)) throw SchemaError("ground_rows count does not match extent");
  s.ground.reserve(static_cast<std::size_t>(s.nx) * s.ny);
  for (const auto& row : rows) decode_row(row, s.nx, s.ground);

  for (const auto& o : require<nlohmann::json>(j, "obstacles")) {
    ObstacleSegment seg;
    seg.p0 = vec_from(require<nlohmann::json>(o, "p0"));
    seg.p1 = vec_from(require<nlohmann::json>(o, "p1"));
    seg.z_low = require<double>(o, "z_low");
    seg.z_high = require<double>(o, "z_high");
    s.obstacles.push_back(seg);
  }
  for (const auto& w : require<nlohmann::json>(j, "trajectory"))
    s.trajectory.emplace_back(require<double>(w, "x"), require<double>(w, "y"), require<double>(w, "theta"));
  s.rng_seed = require<std::uint64_t>(j, "rng_seed");
  if (j.contains("regions")) {
    for (const auto& r : j.at("regions"))
      s.regions.push_back({require<std::string>(r, "name"), vec_from(r.at("min")), vec_from(r.at("max"))});
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write scenario file: " + path.string());
  out << scenario_to_json(s).dump(1) << '\n';
}

Scenario resolve_scenario(const std::string& name_or_path) {
  if (auto c = parse_canonical(name_or_path)) return build_canonical(*c);
  return load_scenario(name_or_path);
}

double nearest_obstacle_distance(const Scenario& s, const Vec2& p, std::pair<double, double> band) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : s.obstacles) {
    if (o.z_high < band.first || o.z_low > band.second) continue;
    best = std::min(best, point_segment_distance(p, o.p0, o.p1));
  }
  return best;
}

}  // namespace tsg
