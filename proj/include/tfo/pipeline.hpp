#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfo/error.hpp"
#include "tfo/geo.hpp"
#include "tfo/solvers.hpp"

namespace tfo {

struct PipelineConfig {
  // Network: a file clipped to center/radius, or a grid centered on `center`.
  std::optional<std::string> network_file;
  std::size_t grid_rows = 10;
  std::size_t grid_cols = 10;
  double grid_spacing = 200.0;  // meters
  double grid_speed = 13.89;    // m/s
  double grid_jitter = 0.0;
  LatLon center{48.72, 21.26};
  double radius_km = 2.0;

  // Demand.
  std::size_t vehicles = 100;
  double l_min = 600.0;
  double l_max = 8000.0;
  std::optional<LatLon> attraction;
  double attraction_radius = 500.0;

  // Routes and congestion.
  std::size_t alternatives = 2;
  double alpha = 10.0;
  double window = 600.0;
  double gamma = 4.0;

  // Clustering.
  bool clustering = true;
  double resolution = 4.0;
  std::size_t min_cluster_size = 1000;
  std::size_t max_clusters = 5;

  std::string solver = "sa";  // exhaustive | sa | tabu
  SolverConfig solver_cfg;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";
};

struct ConfigKey {
  std::string name;
  std::string help;
};

/// Every settable key, in the order used for config snapshots.
const std::vector<ConfigKey>& config_keys();

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::map<std::string, std::string> parse_config(std::istream& in);
void apply_config(PipelineConfig& cfg, const std::map<std::string, std::string>& values);
PipelineConfig load_config(const std::filesystem::path& path);

/// key=value snapshot of every key with a value, one per line.
std::string format_config(const PipelineConfig& cfg);
void validate(const PipelineConfig& cfg);

/// Error raised inside a pipeline stage; the message is prefixed with the stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error("stage " + stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

namespace files {
inline constexpr const char* kConfig = "config.txt";
inline constexpr const char* kNetwork = "network.txt";
inline constexpr const char* kVehicles = "vehicles.csv";
inline constexpr const char* kRoutePoints = "routes.csv";
inline constexpr const char* kRouteSummary = "routes_summary.csv";
inline constexpr const char* kRouteEdges = "route_edges.csv";
inline constexpr const char* kWeights = "weights.csv";
inline constexpr const char* kPenalties = "penalties.csv";
inline constexpr const char* kClusters = "clusters.csv";
inline constexpr const char* kResults = "results.csv";
inline constexpr const char* kAssignment = "assignment.csv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kHeatmapCsv = "heatmap.csv";
inline constexpr const char* kHeatmapGeojson = "heatmap.geojson";
inline constexpr const char* kTimings = "timings.json";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace files

std::string qubo_file_name(std::size_t cluster);
std::string lp_file_name(std::size_t cluster);

// Stages. Each reads its inputs from cfg.output_dir and writes its outputs there.
void stage_generate(const PipelineConfig& cfg);    // network, vehicles, routes
void stage_weights(const PipelineConfig& cfg);     // weights, penalties
void stage_cluster(const PipelineConfig& cfg);     // clusters
void stage_build_qubo(const PipelineConfig& cfg);  // one COO file per cluster
void stage_solve(const PipelineConfig& cfg);       // results, assignment
void stage_evaluate(const PipelineConfig& cfg, const std::vector<std::filesystem::path>& extra_results = {});
void stage_export(const PipelineConfig& cfg, bool heatmap = true, bool lp = true);  // then the manifest

std::string sha256_file(const std::filesystem::path& path);

/// Hashes every deterministic artifact in the run directory. Files carrying
/// wall-clock timings are listed without a hash.
nlohmann::ordered_json build_manifest(const PipelineConfig& cfg);

nlohmann::ordered_json run_pipeline(const PipelineConfig& cfg);

}  // namespace tfo
