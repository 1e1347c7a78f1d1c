#include "tfo/pipeline.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "tfo/clustering.hpp"
#include "tfo/congestion.hpp"
#include "tfo/demand.hpp"
#include "tfo/error.hpp"
#include "tfo/evaluation.hpp"
#include "tfo/qubo.hpp"
#include "tfo/road_network.hpp"
#include "tfo/routing.hpp"
#include "tfo/text.hpp"

namespace tfo {

namespace fs = std::filesystem;

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"network-file", "road network file; a grid is generated when unset"},
      {"grid-rows", "grid rows"},
      {"grid-cols", "grid columns"},
      {"grid-spacing", "grid spacing in meters"},
      {"grid-speed", "grid speed in m/s"},
      {"grid-jitter", "relative random speed spread per grid road, in [0, 1)"},
      {"center-lat", "selection center latitude"},
      {"center-lon", "selection center longitude"},
      {"radius-km", "selection radius for file networks"},
      {"vehicles", "number of vehicles"},
      {"l-min", "minimum air-line trip length in meters"},
      {"l-max", "maximum air-line trip length in meters"},
      {"attraction-lat", "attraction point latitude"},
      {"attraction-lon", "attraction point longitude"},
      {"attraction-radius", "destinations lie within this many meters of the attraction point"},
      {"alternatives", "route alternatives per vehicle (k)"},
      {"alpha", "sampling interval in seconds"},
      {"window", "simulation window in seconds"},
      {"gamma", "congestion distance factor"},
      {"clustering", "run community detection (true/false)"},
      {"resolution", "modularity resolution"},
      {"min-cluster-size", "minimum cluster size (m)"},
      {"max-clusters", "maximum number of clusters kept (L)"},
      {"solver", "exhaustive, sa or tabu"},
      {"seed", "master seed"},
      {"time-limit", "solver time limit in seconds"},
      {"sa-reads", "annealing restarts"},
      {"sa-sweeps", "annealing sweeps per read"},
      {"sa-t-initial", "annealing start temperature"},
      {"sa-t-final", "annealing end temperature"},
      {"sa-cooling", "geometric cooling factor"},
      {"tabu-tenure", "tabu tenure"},
      {"tabu-stagnation", "iterations without improvement before a restart"},
      {"tabu-iterations", "tabu iteration budget"},
      {"output-dir", "run directory"},
  };
  return keys;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(v, 0);
  } catch (const ParseError&) {
    throw ValidationError(fmt::format("{}: invalid number '{}'", key, v));
  }
}

std::size_t to_count(const std::string& key, const std::string& v) {
  try {
    return parse_count(v, 0);
  } catch (const ParseError&) {
    throw ValidationError(fmt::format("{}: invalid count '{}'", key, v));
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ValidationError(fmt::format("{}: invalid boolean '{}'", key, v));
}

LatLon& attraction(PipelineConfig& cfg) {
  if (!cfg.attraction) cfg.attraction = LatLon{NAN, NAN};
  return *cfg.attraction;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& v) {
  using Setter = std::function<void(PipelineConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"network-file", [](auto& c, auto& v) { c.network_file = v; }},
      {"grid-rows", [](auto& c, auto& v) { c.grid_rows = to_count("grid-rows", v); }},
      {"grid-cols", [](auto& c, auto& v) { c.grid_cols = to_count("grid-cols", v); }},
      {"grid-spacing", [](auto& c, auto& v) { c.grid_spacing = to_double("grid-spacing", v); }},
      {"grid-speed", [](auto& c, auto& v) { c.grid_speed = to_double("grid-speed", v); }},
      {"grid-jitter", [](auto& c, auto& v) { c.grid_jitter = to_double("grid-jitter", v); }},
      {"center-lat", [](auto& c, auto& v) { c.center.lat = to_double("center-lat", v); }},
      {"center-lon", [](auto& c, auto& v) { c.center.lon = to_double("center-lon", v); }},
      {"radius-km", [](auto& c, auto& v) { c.radius_km = to_double("radius-km", v); }},
      {"vehicles", [](auto& c, auto& v) { c.vehicles = to_count("vehicles", v); }},
      {"l-min", [](auto& c, auto& v) { c.l_min = to_double("l-min", v); }},
      {"l-max", [](auto& c, auto& v) { c.l_max = to_double("l-max", v); }},
      {"attraction-lat", [](auto& c, auto& v) { attraction(c).lat = to_double("attraction-lat", v); }},
      {"attraction-lon", [](auto& c, auto& v) { attraction(c).lon = to_double("attraction-lon", v); }},
      {"attraction-radius", [](auto& c, auto& v) { c.attraction_radius = to_double("attraction-radius", v); }},
      {"alternatives", [](auto& c, auto& v) { c.alternatives = to_count("alternatives", v); }},
      {"alpha", [](auto& c, auto& v) { c.alpha = to_double("alpha", v); }},
      {"window", [](auto& c, auto& v) { c.window = to_double("window", v); }},
      {"gamma", [](auto& c, auto& v) { c.gamma = to_double("gamma", v); }},
      {"clustering", [](auto& c, auto& v) { c.clustering = to_bool("clustering", v); }},
      {"resolution", [](auto& c, auto& v) { c.resolution = to_double("resolution", v); }},
      {"min-cluster-size", [](auto& c, auto& v) { c.min_cluster_size = to_count("min-cluster-size", v); }},
      {"max-clusters", [](auto& c, auto& v) { c.max_clusters = to_count("max-clusters", v); }},
      {"solver", [](auto& c, auto& v) { c.solver = v; }},
      {"seed", [](auto& c, auto& v) { c.seed = to_count("seed", v); }},
      {"time-limit", [](auto& c, auto& v) { c.solver_cfg.time_limit_s = to_double("time-limit", v); }},
      {"sa-reads", [](auto& c, auto& v) { c.solver_cfg.sa_reads = to_count("sa-reads", v); }},
      {"sa-sweeps", [](auto& c, auto& v) { c.solver_cfg.sa_sweeps = to_count("sa-sweeps", v); }},
      {"sa-t-initial", [](auto& c, auto& v) { c.solver_cfg.sa_t_initial = to_double("sa-t-initial", v); }},
      {"sa-t-final", [](auto& c, auto& v) { c.solver_cfg.sa_t_final = to_double("sa-t-final", v); }},
      {"sa-cooling", [](auto& c, auto& v) { c.solver_cfg.sa_cooling = to_double("sa-cooling", v); }},
      {"tabu-tenure", [](auto& c, auto& v) { c.solver_cfg.tabu_tenure = to_count("tabu-tenure", v); }},
      {"tabu-stagnation", [](auto& c, auto& v) { c.solver_cfg.tabu_stagnation = to_count("tabu-stagnation", v); }},
      {"tabu-iterations", [](auto& c, auto& v) { c.solver_cfg.tabu_iterations = to_count("tabu-iterations", v); }},
      {"output-dir", [](auto& c, auto& v) { c.output_dir = v; }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ValidationError(fmt::format("unknown config key '{}'", key));
  it->second(cfg, v);
}

std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    if (trim(view).empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", n);
    std::string key = trim(view.substr(0, eq));
    std::string value = trim(view.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", n);
    if (!out.emplace(key, value).second) throw ParseError(fmt::format("duplicate key '{}'", key), n);
  }
  return out;
}

void apply_config(PipelineConfig& cfg, const std::map<std::string, std::string>& values) {
  for (const auto& [k, v] : values) set_config_value(cfg, k, v);
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open config file {}", path.string()));
  PipelineConfig cfg;
  apply_config(cfg, parse_config(in));
  return cfg;
}

std::string format_config(const PipelineConfig& c) {
  std::string out;
  auto put = [&](const char* key, const auto& value) { out += fmt::format("{}={}\n", key, value); };
  if (c.network_file) put("network-file", *c.network_file);
  put("grid-rows", c.grid_rows);
  put("grid-cols", c.grid_cols);
  put("grid-spacing", c.grid_spacing);
  put("grid-speed", c.grid_speed);
  put("grid-jitter", c.grid_jitter);
  put("center-lat", c.center.lat);
  put("center-lon", c.center.lon);
  put("radius-km", c.radius_km);
  put("vehicles", c.vehicles);
  put("l-min", c.l_min);
  put("l-max", c.l_max);
  if (c.attraction) {
    put("attraction-lat", c.attraction->lat);
    put("attraction-lon", c.attraction->lon);
  }
  put("attraction-radius", c.attraction_radius);
  put("alternatives", c.alternatives);
  put("alpha", c.alpha);
  put("window", c.window);
  put("gamma", c.gamma);
  put("clustering", c.clustering ? "true" : "false");
  put("resolution", c.resolution);
  put("min-cluster-size", c.min_cluster_size);
  put("max-clusters", c.max_clusters);
  put("solver", c.solver);
  put("seed", c.seed);
  const SolverConfig& s = c.solver_cfg;
  if (s.time_limit_s) put("time-limit", *s.time_limit_s);
  put("sa-reads", s.sa_reads);
  if (s.sa_sweeps) put("sa-sweeps", *s.sa_sweeps);
  if (s.sa_t_initial) put("sa-t-initial", *s.sa_t_initial);
  if (s.sa_t_final) put("sa-t-final", *s.sa_t_final);
  if (s.sa_cooling) put("sa-cooling", *s.sa_cooling);
  if (s.tabu_tenure) put("tabu-tenure", *s.tabu_tenure);
  if (s.tabu_stagnation) put("tabu-stagnation", *s.tabu_stagnation);
  if (s.tabu_iterations) put("tabu-iterations", *s.tabu_iterations);
  return out;
}

void validate(const PipelineConfig& c) {
  if (!c.network_file && (c.grid_rows < 2 || c.grid_cols < 2)) throw ValidationError("grid needs at least 2x2 nodes");
  if (c.network_file && !(c.radius_km > 0.0)) throw ValidationError("radius-km must be positive");
  if (c.vehicles < 1) throw ValidationError("vehicles must be >= 1");
  if (!(c.l_min > 0.0 && c.l_min < c.l_max)) throw ValidationError("need 0 < l-min < l-max");
  if (c.attraction && !(std::isfinite(c.attraction->lat) && std::isfinite(c.attraction->lon)))
    throw ValidationError("attraction-lat and attraction-lon must be set together");
  if (!(c.attraction_radius > 0.0)) throw ValidationError("attraction-radius must be positive");
  validate(RoutingConfig{c.alternatives, c.alpha, c.window});
  if (!(c.gamma > 0.0)) throw ValidationError("gamma must be positive");
  if (!(c.resolution > 0.0)) throw ValidationError("resolution must be positive");
  if (c.min_cluster_size < 1 || c.max_clusters < 1)
    throw ValidationError("min-cluster-size and max-clusters must be >= 1");
  if (c.solver != "exhaustive" && c.solver != "sa" && c.solver != "tabu")
    throw ValidationError(fmt::format("unknown solver '{}'", c.solver));
  validate(c.solver_cfg);
}

std::string qubo_file_name(std::size_t cluster) { return fmt::format("qubo_cluster_{}.coo", cluster); }
std::string lp_file_name(std::size_t cluster) { return fmt::format("qubo_cluster_{}.lp", cluster); }

namespace {

using Clock = std::chrono::steady_clock;

fs::path input(const PipelineConfig& cfg, const std::string& name) {
  fs::path p = cfg.output_dir / name;
  if (!fs::is_regular_file(p)) throw Error(fmt::format("missing input file {}", p.string()));
  return p;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(fmt::format("cannot open {}", p.string()));
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", p.string()));
  return out;
}

void record_timing(const PipelineConfig& cfg, const std::string& stage, double seconds) {
  const fs::path p = cfg.output_dir / files::kTimings;
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  if (fs::exists(p)) {
    std::ifstream in(p);
    t = nlohmann::ordered_json::parse(in, nullptr, false);
    if (t.is_discarded() || !t.is_object()) t = nlohmann::ordered_json::object();
  }
  t[stage] = seconds;
  open_out(p) << t.dump(1) << '\n';
}

template <class F>
void run_stage(const PipelineConfig& cfg, const std::string& name, F&& body) {
  const auto t0 = Clock::now();
  try {
    validate(cfg);
    fs::create_directories(cfg.output_dir);
    body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
  record_timing(cfg, name, std::chrono::duration<double>(Clock::now() - t0).count());
}

RoadNetwork load_run_network(const PipelineConfig& cfg) { return load_network(input(cfg, files::kNetwork)); }

std::vector<Route> load_run_routes(const PipelineConfig& cfg, const RoadNetwork& net) {
  auto points = open_in(input(cfg, files::kRoutePoints));
  auto summary = open_in(input(cfg, files::kRouteSummary));
  auto edges = open_in(input(cfg, files::kRouteEdges));
  return read_routes(points, summary, edges, net, cfg.alpha);
}

CongestionWeights load_run_weights(const PipelineConfig& cfg) {
  auto w = open_in(input(cfg, files::kWeights));
  auto p = open_in(input(cfg, files::kPenalties));
  return read_weights(w, p);
}

ClusterSet load_run_clusters(const PipelineConfig& cfg) {
  auto in = open_in(input(cfg, files::kClusters));
  return read_clusters(in);
}

QuboInstance load_run_qubo(const PipelineConfig& cfg, std::size_t c) {
  auto in = open_in(input(cfg, qubo_file_name(c)));
  return read_qubo(in);
}

GlobalAssignment load_run_assignment(const PipelineConfig& cfg) {
  auto in = open_in(input(cfg, files::kAssignment));
  return read_assignment(in);
}

void remove_matching(const fs::path& dir, std::string_view prefix, std::string_view suffix) {
  if (!fs::exists(dir)) return;
  std::vector<fs::path> doomed;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with(prefix) && name.ends_with(suffix)) doomed.push_back(entry.path());
  }
  for (const auto& p : doomed) fs::remove(p);
}

RoadNetwork make_network(const PipelineConfig& cfg) {
  if (cfg.network_file) return clip_network(load_network(*cfg.network_file), {cfg.center, cfg.radius_km});
  GridSpec spec;
  spec.rows = cfg.grid_rows;
  spec.cols = cfg.grid_cols;
  spec.spacing_m = cfg.grid_spacing;
  spec.speed_mps = cfg.grid_speed;
  spec.seed = cfg.seed;
  spec.speed_jitter = cfg.grid_jitter;
  const double to_deg = 180.0 / std::numbers::pi;
  const double half_h = 0.5 * static_cast<double>(cfg.grid_rows - 1) * cfg.grid_spacing;
  const double half_w = 0.5 * static_cast<double>(cfg.grid_cols - 1) * cfg.grid_spacing;
  spec.origin.lat = cfg.center.lat - half_h / kEarthRadiusMeters * to_deg;
  spec.origin.lon =
      cfg.center.lon - half_w / (kEarthRadiusMeters * std::cos(spec.origin.lat / to_deg)) * to_deg;
  return generate_grid(spec);
}

std::size_t first_shortest(const std::vector<double>& penalties) {
  return static_cast<std::size_t>(std::ranges::min_element(penalties) - penalties.begin());
}

SolveResult run_solver(const PipelineConfig& cfg, const QuboInstance& q, std::uint64_t seed) {
  SolverConfig sc = cfg.solver_cfg;
  sc.seed = seed;
  if (cfg.solver == "exhaustive") return solve_exhaustive(q, ExhaustiveMode::kAuto);
  if (cfg.solver == "sa") return solve_sa(q, sc);
  return solve_tabu(q, sc);
}

}  // namespace

void stage_generate(const PipelineConfig& cfg) {
  run_stage(cfg, "generate", [&] {
    open_out(cfg.output_dir / files::kConfig) << format_config(cfg);
    const RoadNetwork net = make_network(cfg);
    save_network(cfg.output_dir / files::kNetwork, net);

    DemandConfig dc;
    dc.n = cfg.vehicles;
    dc.l_min = cfg.l_min;
    dc.l_max = cfg.l_max;
    dc.attraction = cfg.attraction;
    dc.attraction_radius_m = cfg.attraction_radius;
    dc.seed = cfg.seed;
    const auto vehicles = generate_vehicles(net, dc);
    {
      auto out = open_out(cfg.output_dir / files::kVehicles);
      write_vehicles(out, net, vehicles);
    }

    const auto routes = route_vehicles(net, vehicles, RoutingConfig{cfg.alternatives, cfg.alpha, cfg.window});
    auto points = open_out(cfg.output_dir / files::kRoutePoints);
    write_route_points(points, net, routes);
    auto summary = open_out(cfg.output_dir / files::kRouteSummary);
    write_route_summary(summary, routes);
    auto edges = open_out(cfg.output_dir / files::kRouteEdges);
    write_route_edges(edges, net, routes);
  });
}

void stage_weights(const PipelineConfig& cfg) {
  run_stage(cfg, "weights", [&] {
    const RoadNetwork net = load_run_network(cfg);
    const auto routes = load_run_routes(cfg, net);
    const auto entries = detect_conflicts(net, routes, cfg.alpha, cfg.window, cfg.gamma);
    const CongestionWeights w = build_weights(entries, routes);
    auto wo = open_out(cfg.output_dir / files::kWeights);
    write_weights(wo, w);
    auto po = open_out(cfg.output_dir / files::kPenalties);
    write_penalties(po, w);
  });
}

void stage_cluster(const PipelineConfig& cfg) {
  run_stage(cfg, "cluster", [&] {
    const CongestionWeights w = load_run_weights(cfg);
    ClusterSet cs;
    if (cfg.clustering) {
      const ConflictGraph g = build_conflict_graph(w);
      cs = merge_and_filter(leiden(g, cfg.resolution, cfg.seed), g, cfg.min_cluster_size, cfg.max_clusters);
      cs.rho = cfg.resolution;
    } else {
      cs = single_cluster(w.vehicle_count());
    }
    auto out = open_out(cfg.output_dir / files::kClusters);
    write_clusters(out, cs, w.vehicle_count());
  });
}

void stage_build_qubo(const PipelineConfig& cfg) {
  run_stage(cfg, "build-qubo", [&] {
    const CongestionWeights w = load_run_weights(cfg);
    const ClusterSet cs = load_run_clusters(cfg);
    remove_matching(cfg.output_dir, "qubo_cluster_", ".coo");
    for (std::size_t c = 0; c < cs.clusters.size(); ++c) {
      auto out = open_out(cfg.output_dir / qubo_file_name(c));
      write_qubo(out, build_qubo(w, cs.clusters[c], cfg.alternatives));
    }
  });
}

void stage_solve(const PipelineConfig& cfg) {
  run_stage(cfg, "solve", [&] {
    const CongestionWeights w = load_run_weights(cfg);
    const ClusterSet cs = load_run_clusters(cfg);
    GlobalAssignment ga;
    ga.alt.resize(w.vehicle_count());
    ga.provenance.assign(w.vehicle_count(), "shortest");
    for (std::size_t i = 0; i < w.vehicle_count(); ++i) ga.alt[i] = first_shortest(w.penalties[i]);

    std::vector<ResultRow> rows;
    for (std::size_t c = 0; c < cs.clusters.size(); ++c) {
      const QuboInstance q = load_run_qubo(cfg, c);
      const std::uint64_t seed = cfg.seed + c;
      const SolveResult r = run_solver(cfg, q, seed);
      const Assignment fixed = repair(q, r.x);
      const auto alts = decode(q, fixed);
      for (std::size_t b = 0; b < q.block_count(); ++b) {
        const VehicleId v = q.vehicles[b];
        ga.alt.at(v) = alts[b];
        bool changed = false;
        for (std::size_t a = 0; a < q.k; ++a) changed |= fixed[q.index(b, a)] != r.x[q.index(b, a)];
        ga.provenance[v] = changed ? "repair" : cfg.solver;
      }
      rows.push_back({cfg.solver, seed, energy(q, fixed), r.valid, fixed != r.x, r.prep_s, r.solve_s});
    }
    auto ro = open_out(cfg.output_dir / files::kResults);
    write_results(ro, rows);
    auto ao = open_out(cfg.output_dir / files::kAssignment);
    write_assignment(ao, ga);
  });
}

void stage_evaluate(const PipelineConfig& cfg, const std::vector<fs::path>& extra_results) {
  run_stage(cfg, "evaluate", [&] {
    if (!extra_results.empty() && extra_results.size() != 2)
      throw ValidationError("energy comparison needs exactly two results files");
    const CongestionWeights w = load_run_weights(cfg);
    const RoadNetwork net = load_run_network(cfg);
    const auto routes = load_run_routes(cfg, net);
    const ClusterSet cs = load_run_clusters(cfg);
    const GlobalAssignment ga = load_run_assignment(cfg);

    EvaluationReport report = evaluate(w, ga, cs, routes, cfg.seed);
    std::size_t valid = 0;
    for (std::size_t i = 0; i < ga.size(); ++i) valid += ga.alt[i] < w.alternatives(static_cast<VehicleId>(i));
    report.validity_rate = ga.size() ? static_cast<double>(valid) / static_cast<double>(ga.size()) : 1.0;
    report.repaired_blocks = static_cast<std::size_t>(std::ranges::count(ga.provenance, std::string("repair")));

    auto results_in = open_in(input(cfg, files::kResults));
    const auto rows = read_results(results_in);
    for (std::size_t c = 0; c < cs.clusters.size(); ++c) {
      const QuboInstance q = load_run_qubo(cfg, c);
      report.qubo_densities.push_back(qubo_density(q));
      const double e_short = energy(q, shortest_assignment(q));
      if (c < rows.size() && e_short != 0.0)
        report.delta_energies.push_back({rows[c].solver, "shortest", delta_energy(rows[c].energy, e_short)});
    }
    if (extra_results.size() == 2) {
      auto in_a = open_in(extra_results[0]);
      auto in_b = open_in(extra_results[1]);
      const auto a = read_results(in_a);
      const auto b = read_results(in_b);
      if (a.size() != b.size()) throw ValidationError("results files have different row counts");
      for (std::size_t r = 0; r < a.size(); ++r)
        report.delta_energies.push_back({a[r].solver, b[r].solver, delta_energy(a[r].energy, b[r].energy)});
    }
    open_out(cfg.output_dir / files::kReport) << to_json(report).dump(1) << '\n';
  });
}

void stage_export(const PipelineConfig& cfg, bool heatmap, bool lp) {
  run_stage(cfg, "export", [&] {
    if (heatmap) {
      const RoadNetwork net = load_run_network(cfg);
      const auto routes = load_run_routes(cfg, net);
      const GlobalAssignment ga = load_run_assignment(cfg);
      const auto scores = edge_heatmap(net, routes, ga, cfg.window, cfg.gamma);
      auto out = open_out(cfg.output_dir / files::kHeatmapCsv);
      write_heatmap_csv(out, net, scores);
      auto geo = open_out(cfg.output_dir / files::kHeatmapGeojson);
      write_heatmap_geojson(geo, net, scores);
    }
    if (!lp) return;
    const ClusterSet cs = load_run_clusters(cfg);
    remove_matching(cfg.output_dir, "qubo_cluster_", ".lp");
    for (std::size_t c = 0; c < cs.clusters.size(); ++c) {
      auto out = open_out(cfg.output_dir / lp_file_name(c));
      write_milp_lp(out, load_run_qubo(cfg, c));
    }
  });
  // The manifest is written after the export timing so it can list every file.
  try {
    open_out(cfg.output_dir / files::kManifest) << build_manifest(cfg).dump(1) << '\n';
  } catch (const std::exception& e) {
    throw StageError("export", e.what());
  }
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 initialisation failed");
  }
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

nlohmann::ordered_json build_manifest(const PipelineConfig& cfg) {
  static const std::vector<std::string> unhashed = {files::kResults, files::kTimings};
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(cfg.output_dir))
    if (entry.is_regular_file() && entry.path().filename() != files::kManifest)
      names.push_back(entry.path().filename().string());
  std::ranges::sort(names);

  nlohmann::ordered_json m;
  m["tool"] = "tfo";
  m["version"] = "0.1.0";
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::istringstream snapshot(format_config(cfg));
  for (const auto& [k, v] : parse_config(snapshot)) config[k] = v;
  m["config"] = std::move(config);
  nlohmann::ordered_json artifacts = nlohmann::ordered_json::array();
  nlohmann::ordered_json volatile_files = nlohmann::ordered_json::array();
  for (const auto& name : names) {
    if (std::ranges::find(unhashed, name) != unhashed.end())
      volatile_files.push_back(name);
    else
      artifacts.push_back({{"file", name}, {"sha256", sha256_file(cfg.output_dir / name)}});
  }
  m["artifacts"] = std::move(artifacts);
  m["unhashed"] = std::move(volatile_files);
  return m;
}

nlohmann::ordered_json run_pipeline(const PipelineConfig& cfg) {
  validate(cfg);
  fs::create_directories(cfg.output_dir);
  fs::remove(cfg.output_dir / files::kTimings);
  stage_generate(cfg);
  stage_weights(cfg);
  stage_cluster(cfg);
  stage_build_qubo(cfg);
  stage_solve(cfg);
  stage_evaluate(cfg);
  stage_export(cfg);
  return build_manifest(cfg);
}

}  // namespace tfo
