#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tfo/error.hpp"
#include "tfo/pipeline.hpp"
#include "tfo/qubo.hpp"
#include "tfo/solvers.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_file;
  std::map<std::string, std::string> flags;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_file, "key=value config file");
  for (const auto& key : tfo::config_keys()) sub->add_option("--" + key.name, c.flags[key.name], key.help);
}

// Defaults < run directory snapshot (later stages) < config file < flags.
tfo::PipelineConfig resolve(const Common& c, CLI::App* sub, bool use_snapshot) {
  std::map<std::string, std::string> file_values;
  if (!c.config_file.empty()) {
    std::ifstream in(c.config_file);
    if (!in) throw tfo::Error(fmt::format("cannot open config file {}", c.config_file));
    file_values = tfo::parse_config(in);
  }
  std::map<std::string, std::string> flag_values;
  for (const auto& [k, v] : c.flags)
    if (sub->count("--" + k)) flag_values[k] = v;

  std::string dir = "run";
  if (auto it = file_values.find("output-dir"); it != file_values.end()) dir = it->second;
  if (auto it = flag_values.find("output-dir"); it != flag_values.end()) dir = it->second;

  tfo::PipelineConfig cfg;
  const fs::path snapshot = fs::path(dir) / tfo::files::kConfig;
  if (use_snapshot && fs::exists(snapshot)) cfg = tfo::load_config(snapshot);
  tfo::apply_config(cfg, file_values);
  tfo::apply_config(cfg, flag_values);
  cfg.output_dir = dir;
  return cfg;
}

int solve_single(const std::string& qubo_path, const tfo::PipelineConfig& cfg, const std::string& results_path) {
  std::ifstream in(qubo_path);
  if (!in) throw tfo::Error(fmt::format("missing input file {}", qubo_path));
  const tfo::QuboInstance q = tfo::read_qubo(in);
  tfo::SolverConfig sc = cfg.solver_cfg;
  sc.seed = cfg.seed;
  tfo::SolveResult r;
  if (cfg.solver == "exhaustive")
    r = tfo::solve_exhaustive(q);
  else if (cfg.solver == "sa")
    r = tfo::solve_sa(q, sc);
  else if (cfg.solver == "tabu")
    r = tfo::solve_tabu(q, sc);
  else
    throw tfo::ValidationError(fmt::format("unknown solver '{}'", cfg.solver));
  const tfo::Assignment fixed = tfo::repair(q, r.x);
  const tfo::ResultRow row{cfg.solver, cfg.seed, tfo::energy(q, fixed), r.valid, fixed != r.x, r.prep_s, r.solve_s};
  if (results_path.empty()) {
    tfo::write_results(std::cout, std::span(&row, 1));
  } else {
    std::ofstream out(results_path);
    if (!out) throw tfo::Error(fmt::format("cannot write {}", results_path));
    tfo::write_results(out, std::span(&row, 1));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic flow optimisation as a QUBO"};
  app.require_subcommand(1);

  Common generate, weights, cluster, build, solve, evaluate, exporter, run_all;
  auto* s_generate = app.add_subcommand("generate", "network, vehicles and route alternatives");
  auto* s_weights = app.add_subcommand("weights", "congestion weights and duration penalties");
  auto* s_cluster = app.add_subcommand("cluster", "conflict graph communities");
  auto* s_build = app.add_subcommand("build-qubo", "one QUBO file per cluster");
  auto* s_solve = app.add_subcommand("solve", "solve every cluster, or a single QUBO file with --qubo");
  auto* s_evaluate = app.add_subcommand("evaluate", "global cost, baselines and energy deltas");
  auto* s_export = app.add_subcommand("export", "heatmap, LP files and the run manifest");
  auto* s_run_all = app.add_subcommand("run-all", "every stage in order");
  add_common(s_generate, generate);
  add_common(s_weights, weights);
  add_common(s_cluster, cluster);
  add_common(s_build, build);
  add_common(s_solve, solve);
  add_common(s_evaluate, evaluate);
  add_common(s_export, exporter);
  add_common(s_run_all, run_all);

  std::string qubo_path, results_path;
  s_solve->add_option("--qubo", qubo_path, "solve this QUBO file only");
  s_solve->add_option("--results", results_path, "results CSV for --qubo (default stdout)");
  std::vector<std::string> compare;
  s_evaluate->add_option("--results", compare, "two results files to compare")->expected(2);
  bool heatmap = false, lp = false;
  s_export->add_flag("--heatmap", heatmap, "write heatmap CSV and GeoJSON");
  s_export->add_flag("--lp", lp, "write LP files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (s_generate->parsed()) {
      tfo::stage_generate(resolve(generate, s_generate, false));
    } else if (s_weights->parsed()) {
      tfo::stage_weights(resolve(weights, s_weights, true));
    } else if (s_cluster->parsed()) {
      tfo::stage_cluster(resolve(cluster, s_cluster, true));
    } else if (s_build->parsed()) {
      tfo::stage_build_qubo(resolve(build, s_build, true));
    } else if (s_solve->parsed()) {
      const auto cfg = resolve(solve, s_solve, qubo_path.empty());
      if (!qubo_path.empty()) return solve_single(qubo_path, cfg, results_path);
      tfo::stage_solve(cfg);
    } else if (s_evaluate->parsed()) {
      std::vector<fs::path> extra(compare.begin(), compare.end());
      tfo::stage_evaluate(resolve(evaluate, s_evaluate, true), extra);
    } else if (s_export->parsed()) {
      if (!heatmap && !lp) heatmap = lp = true;
      tfo::stage_export(resolve(exporter, s_export, true), heatmap, lp);
    } else if (s_run_all->parsed()) {
      const auto manifest = tfo::run_pipeline(resolve(run_all, s_run_all, false));
      fmt::print("{} artifacts hashed\n", manifest["artifacts"].size());
    }
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "tfo: {}\n", e.what());
    return 1;
  }
  return 0;
}
