#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfo/clustering.hpp"
#include "tfo/congestion.hpp"
#include "tfo/routing.hpp"

namespace tfo {

/// Chosen alternative for every vehicle, with where the choice came from
/// (a solver name, "shortest", "random" or "repair").
struct GlobalAssignment {
  std::vector<std::size_t> alt;
  std::vector<std::string> provenance;

  std::size_t size() const { return alt.size(); }
};

void validate(const GlobalAssignment& ga, const CongestionWeights& weights);

/// Sum of pair weights over all vehicle pairs plus the duration penalties.
double congestion_cost(const CongestionWeights& weights, const GlobalAssignment& ga);

/// Same cost restricted to pairs and penalties inside `subset`.
double congestion_cost(const CongestionWeights& weights, const GlobalAssignment& ga, std::span<const VehicleId> subset);

double penalty_cost(const CongestionWeights& weights, const GlobalAssignment& ga);

/// (e_a - e_b) / e_b. Negative means `e_a` is better.
double delta_energy(double e_a, double e_b);

GlobalAssignment baseline_shortest(std::span<const Route> routes);
GlobalAssignment baseline_random(std::span<const Route> routes, std::uint64_t seed);

/// Percent reduction of `cost_opt` against `cost_base`.
double improvement_vs_baseline(double cost_opt, double cost_base);

/// degree -> number of vehicles with that many distinct conflicting partners.
std::map<std::size_t, std::size_t> overlap_degrees(const CongestionWeights& weights);

/// Congestion score per edge for the chosen routes only.
std::vector<double> edge_heatmap(const RoadNetwork& net, std::span<const Route> routes, const GlobalAssignment& ga,
                                 double window, double gamma);

void write_heatmap_csv(std::ostream& out, const RoadNetwork& net, std::span<const double> scores);
void write_heatmap_geojson(std::ostream& out, const RoadNetwork& net, std::span<const double> scores);

void write_assignment(std::ostream& out, const GlobalAssignment& ga);
GlobalAssignment read_assignment(std::istream& in);

struct DeltaEnergy {
  std::string a;
  std::string b;
  double value = 0.0;
};

struct EvaluationReport {
  double total_cost = 0.0;  // over all vehicle pairs
  std::vector<double> cluster_costs;
  double cross_cluster_cost = 0.0;  // total minus the per-cluster sum
  double shortest_cost = 0.0;
  double random_cost = 0.0;
  double improvement_vs_shortest = 0.0;
  double improvement_vs_random = 0.0;
  double validity_rate = 1.0;
  std::size_t repaired_blocks = 0;
  std::vector<double> qubo_densities;
  std::vector<DeltaEnergy> delta_energies;
  std::map<std::size_t, std::size_t> overlap_histogram;
  std::map<std::string, std::size_t> provenance_counts;
};

/// Fills costs, baselines, improvements, overlap and provenance counts.
/// Validity, densities and energy deltas are left for the caller.
EvaluationReport evaluate(const CongestionWeights& weights, const GlobalAssignment& ga, const ClusterSet& clusters,
                          std::span<const Route> routes, std::uint64_t random_seed);

nlohmann::ordered_json to_json(const EvaluationReport& r);

}  // namespace tfo
