#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsg/pipeline.hpp"

namespace tsg {

inline const std::vector<std::string> kTableColumns = {"N1st", "N2nd", "Nre", "f_re", "DCS", "d_center", "ATE", "T_PGO"};

/// One metrics CSV row (no trailing newline).
std::string csv_row(const MetricsReport& m);
std::string csv_header();

/// What the SVG renderer needs; recoverable from a run directory.
struct RenderInput {
  Scenario scenario;
  nlohmann::json graph;
  std::vector<nlohmann::json> events;
  nlohmann::json clusters = nlohmann::json::array();
};

RenderInput render_input(const RunResult& run);
RenderInput load_render_input(const std::filesystem::path& run_dir);
std::string render_svg(const RenderInput& in);

/// Writes metrics.json, metrics.csv, metrics_runs.csv, rooms.jsonl,
/// graph.json, clusters.json, scenario.json and map.svg into `dir`.
void write_outputs(const std::filesystem::path& dir, const ExperimentResult& exp, const RunConfig& cfg);

/// Side-by-side CSV of two run directories' mean metrics.
std::string compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace tsg
