#include "tsg/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tsg/errors.hpp"

namespace tsg {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw SchemaError("cannot open " + p.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw SchemaError(p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

Room room_from_json(const Json& j) {
  Room r;
  r.id = j.at("id").get<int>();
  r.kind = j.at("kind").get<std::string>() == "FOUR_WALL" ? RoomKind::FourWall : RoomKind::TwoWall;
  r.center = {j.at("center")[0].get<double>(), j.at("center")[1].get<double>()};
  r.axis = j.at("axis").get<double>();
  r.extents.first = j.at("extents")[0].get<double>();
  r.extents.second = j.at("extents")[1].is_number() ? j.at("extents")[1].get<double>() : kUnbounded;
  if (j.contains("span")) r.span = {j.at("span")[0].get<double>(), j.at("span")[1].get<double>()};
  return r;
}

}  // namespace

std::string csv_header() {
  std::string s;
  for (std::size_t k = 0; k < kTableColumns.size(); ++k) s += (k ? "," : "") + kTableColumns[k];
  return s;
}

std::string csv_row(const MetricsReport& m) {
  return num(m.n_first) + "," + num(m.n_second) + "," + num(m.n_re) + "," + num(m.f_re) + "," + num(m.dcs) + "," +
         (m.d_center ? num(*m.d_center) : std::string("")) + "," + num(m.ate) + "," + num(m.t_pgo_total);
}

RenderInput render_input(const RunResult& run) {
  RenderInput in;
  in.scenario = run.scenario;
  in.graph = graph_to_json(run.graph);
  for (const auto& e : run.events) in.events.push_back(room_event_json(e));
  std::vector<FreeSpaceCluster> clusters;
  for (const auto& e : run.events) {
    FreeSpaceCluster c;
    c.id = static_cast<int>(clusters.size());
    c.nodes = run.keyframes.at(static_cast<std::size_t>(e.keyframe)).cluster;
    if (!c.nodes.empty()) clusters.push_back(std::move(c));
  }
  in.clusters = clusters_to_json(clusters);
  return in;
}

RenderInput load_render_input(const fs::path& dir) {
  RenderInput in;
  in.scenario = scenario_from_json(read_json(dir / "scenario.json"));
  in.graph = read_json(dir / "graph.json");
  if (fs::exists(dir / "clusters.json")) in.clusters = read_json(dir / "clusters.json");
  std::ifstream rooms(dir / "rooms.jsonl");
  std::string line;
  while (std::getline(rooms, line))
    if (!line.empty()) in.events.push_back(Json::parse(line));
  return in;
}

std::string render_svg(const RenderInput& in) {
  const Scenario& s = in.scenario;
  const double k = 40.0;
  const double h = s.height * k;
  const auto X = [&](double x) { return num(x * k); };
  const auto Y = [&](double y) { return num(h - y * k); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(s.width * k) << "\" height=\"" << num(h) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int j = 0; j < s.ny; ++j)
    for (int i = 0; i < s.nx; ++i)
      if (s.cell(i, j) == GroundKind::Void)
        os << "<rect x=\"" << X(i * s.cell_size) << "\" y=\"" << Y((j + 1) * s.cell_size) << "\" width=\"" << num(s.cell_size * k)
           << "\" height=\"" << num(s.cell_size * k) << "\" fill=\"#ccc\"/>\n";

  static const char* palette[] = {"#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"};
  for (const auto& c : in.clusters) {
    const char* color = palette[c.at("id").get<int>() % 7];
    for (const auto& p : c.at("nodes"))
      os << "<circle cx=\"" << X(p[0].get<double>()) << "\" cy=\"" << Y(p[1].get<double>()) << "\" r=\"1.5\" fill=\"" << color
         << "\" fill-opacity=\"0.4\"/>\n";
  }

  for (const auto& o : s.obstacles) {
    const bool rail = o.z_high < 1.5;
    os << "<line x1=\"" << X(o.p0.x()) << "\" y1=\"" << Y(o.p0.y()) << "\" x2=\"" << X(o.p1.x()) << "\" y2=\"" << Y(o.p1.y())
       << "\" stroke=\"" << (rail ? "#ff7f0e" : "black") << "\" stroke-width=\"" << (rail ? 2 : 3) << "\"/>\n";
  }

  for (const auto& e : in.events) {
    const Room r = room_from_json(e);
    RoomFootprint f;
    try {
      f = footprint(r);
    } catch (const UnboundedRoom&) {
      continue;
    }
    std::string pts;
    const Vec2 u{std::cos(f.axis), std::sin(f.axis)};
    const Vec2 v{-u.y(), u.x()};
    for (const auto& [a, b] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}) {
      const Vec2 p = f.center + 0.5 * a * f.len_a * u + 0.5 * b * f.len_b * v;
      pts += X(p.x()) + "," + Y(p.y()) + " ";
    }
    os << "<polygon points=\"" << pts << "\" fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";
    os << "<circle cx=\"" << X(r.center.x()) << "\" cy=\"" << Y(r.center.y()) << "\" r=\"3\" fill=\"#d62728\"/>\n";
  }

  std::string gt, est;
  for (const auto& p : s.trajectory) gt += X(p.x) + "," + Y(p.y) + " ";
  for (const auto& p : in.graph.at("poses")) est += X(p.at("x").get<double>()) + "," + Y(p.at("y").get<double>()) + " ";
  os << "<polyline points=\"" << gt << "\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"1.5\"/>\n";
  os << "<polyline points=\"" << est << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\"/>\n";
  os << "</svg>\n";
  return os.str();
}

void write_outputs(const fs::path& dir, const ExperimentResult& exp, const RunConfig& cfg) {
  fs::create_directories(dir);
  Json metrics;
  metrics["config"] = config_to_json(cfg);
  metrics["mean"] = exp.mean.to_json();
  metrics["runs"] = Json::array();
  for (std::size_t k = 0; k < exp.per_run.size(); ++k) {
    Json r = exp.per_run[k].to_json();
    r["seed"] = exp.seeds[k];
    metrics["runs"].push_back(r);
  }
  metrics["under_segmented_runs"] = exp.under_segmented_runs;
  metrics["last_run_under_segmented_keyframes"] = exp.last.under_segmented;
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_text(dir / "metrics.csv", csv_header() + "\n" + csv_row(exp.mean) + "\n");

  std::string runs = "seed," + csv_header() + "\n";
  for (std::size_t k = 0; k < exp.per_run.size(); ++k) runs += std::to_string(exp.seeds[k]) + "," + csv_row(exp.per_run[k]) + "\n";
  write_text(dir / "metrics_runs.csv", runs);

  const RenderInput in = render_input(exp.last);
  std::string jsonl;
  for (const auto& e : in.events) jsonl += e.dump() + "\n";
  write_text(dir / "rooms.jsonl", jsonl);
  write_text(dir / "graph.json", in.graph.dump(1) + "\n");
  write_text(dir / "clusters.json", in.clusters.dump() + "\n");
  save_scenario(exp.last.scenario, dir / "scenario.json");
  write_text(dir / "map.svg", render_svg(in));
}

std::string compare_runs(const fs::path& a, const fs::path& b) {
  std::string out = "run," + csv_header() + "\n";
  for (const auto& dir : {a, b}) {
    const MetricsReport m = MetricsReport::from_json(read_json(dir / "metrics.json").at("mean"));
    std::string label = dir.filename().string();
    if (label.empty()) label = dir.parent_path().filename().string();
    out += label + "," + csv_row(m) + "\n";
  }
  return out;
}

}  // namespace tsg
