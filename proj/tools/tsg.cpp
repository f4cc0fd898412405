#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tsg/config.hpp"
#include "tsg/errors.hpp"
#include "tsg/pipeline.hpp"
#include "tsg/report.hpp"
#include "tsg/world.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Traversability-aware scene graph testbed"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run repeated double traverses and write metrics");
  std::string config_path, scenario, backend, strategy, out_dir = "run";
  std::uint64_t seed = 0;
  int repeats = 0, repeats_parallel = 0;
  bool timing = false, zero_noise = false;
  run->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--scenario", scenario, "four_rooms, long_corridor, open_corridor, or a scenario JSON path");
  run->add_option("--backend", backend, "traversability or esdf")->check(CLI::IsMember({"traversability", "esdf"}));
  run->add_option("--strategy", strategy, "flush or timer")->check(CLI::IsMember({"flush", "timer"}));
  auto* seed_opt = run->add_option("--seed", seed, "Base seed");
  auto* repeats_opt = run->add_option("--repeats", repeats, "Number of repeats")->check(CLI::PositiveNumber);
  auto* par_opt = run->add_option("--repeats-parallel", repeats_parallel, "Worker threads for repeats")->check(CLI::PositiveNumber);
  run->add_flag("--timing", timing, "Timing mode: repeats run serially");
  run->add_flag("--zero-noise", zero_noise, "Disable odometry and range noise");
  run->add_option("--out", out_dir, "Output directory");

  auto* compare = app.add_subcommand("compare", "Side-by-side CSV of two runs");
  std::string dir_a, dir_b;
  compare->add_option("--a", dir_a)->required()->check(CLI::ExistingDirectory);
  compare->add_option("--b", dir_b)->required()->check(CLI::ExistingDirectory);

  auto* render = app.add_subcommand("render", "Render a run directory to SVG");
  std::string run_dir, svg_path;
  render->add_option("--run", run_dir)->required()->check(CLI::ExistingDirectory);
  render->add_option("--svg", svg_path)->required();

  auto* export_cmd = app.add_subcommand("export-scenario", "Write a canonical scenario as JSON");
  std::string export_name, export_path;
  export_cmd->add_option("name", export_name)->required();
  export_cmd->add_option("path", export_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      tsg::RunConfig cfg = config_path.empty() ? tsg::RunConfig{} : tsg::load_config(config_path);
      if (!scenario.empty()) cfg.scenario = scenario;
      if (!backend.empty()) cfg.cluster.backend = tsg::parse_backend(backend);
      if (!strategy.empty()) cfg.rooms.strategy = tsg::parse_strategy(strategy);
      if (*seed_opt) cfg.seed = seed;
      if (*repeats_opt) cfg.repeats = repeats;
      if (*par_opt) cfg.repeats_parallel = repeats_parallel;
      cfg.timing = cfg.timing || timing;
      if (cfg.timing && cfg.repeats_parallel != 1) {
        std::cerr << "timing mode: forcing --repeats-parallel 1\n";
        cfg.repeats_parallel = 1;
      }
      if (zero_noise) cfg.zero_noise();
      tsg::apply_env(cfg);
      cfg.validate();

      const auto exp = tsg::run_experiment(cfg);
      tsg::write_outputs(out_dir, exp, cfg);
      std::cout << tsg::csv_header() << "\n" << tsg::csv_row(exp.mean) << "\n";
      if (exp.under_segmented_runs > 0)
        std::cerr << "under-segmentation: " << exp.under_segmented_runs << " of " << cfg.repeats
                  << " runs had a cluster spanning both walkway sides\n";
    } else if (*compare) {
      std::cout << tsg::compare_runs(dir_a, dir_b);
    } else if (*render) {
      std::ofstream out(svg_path);
      if (!out) throw tsg::Error("cannot write " + svg_path);
      out << tsg::render_svg(tsg::load_render_input(run_dir));
    } else if (*export_cmd) {
      tsg::save_scenario(tsg::resolve_scenario(export_name), export_path);
    }
  } catch (const tsg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
