#include "tfo/evaluation.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <limits>
#include <random>
#include <set>

#include "tfo/error.hpp"
#include "tfo/text.hpp"

namespace tfo {

void validate(const GlobalAssignment& ga, const CongestionWeights& weights) {
  if (ga.alt.size() != weights.vehicle_count())
    throw ValidationError(
        fmt::format("assignment covers {} vehicles, expected {}", ga.alt.size(), weights.vehicle_count()));
  if (ga.provenance.size() != ga.alt.size()) throw ValidationError("assignment provenance size mismatch");
  for (std::size_t i = 0; i < ga.alt.size(); ++i)
    if (ga.alt[i] >= weights.alternatives(static_cast<VehicleId>(i)))
      throw ValidationError(fmt::format("vehicle {} assigned to missing alternative {}", i, ga.alt[i]));
}

double penalty_cost(const CongestionWeights& weights, const GlobalAssignment& ga) {
  validate(ga, weights);
  double s = 0.0;
  for (std::size_t i = 0; i < ga.size(); ++i) s += weights.penalties[i][ga.alt[i]];
  return s;
}

double congestion_cost(const CongestionWeights& weights, const GlobalAssignment& ga) {
  double s = penalty_cost(weights, ga);
  for (const auto& [k, v] : weights.w)
    if (ga.alt[k.i] == k.a && ga.alt[k.j] == k.b) s += v;
  return s;
}

double congestion_cost(const CongestionWeights& weights, const GlobalAssignment& ga, std::span<const VehicleId> subset) {
  validate(ga, weights);
  std::vector<char> in(ga.size(), 0);
  double s = 0.0;
  for (VehicleId v : subset) {
    in.at(v) = 1;
    s += weights.penalties[v][ga.alt[v]];
  }
  for (const auto& [k, v] : weights.w)
    if (in[k.i] && in[k.j] && ga.alt[k.i] == k.a && ga.alt[k.j] == k.b) s += v;
  return s;
}

double delta_energy(double e_a, double e_b) {
  if (e_b == 0.0) throw ValidationError("energy delta undefined for a zero reference energy");
  return (e_a - e_b) / e_b;
}

GlobalAssignment baseline_shortest(std::span<const Route> routes) {
  const auto counts = alternatives_per_vehicle(routes);
  std::vector<double> best(counts.size(), std::numeric_limits<double>::infinity());
  GlobalAssignment ga{std::vector<std::size_t>(counts.size(), 0), std::vector<std::string>(counts.size(), "shortest")};
  for (const Route& r : routes)
    if (r.duration < best[r.vehicle] || (r.duration == best[r.vehicle] && r.alt < ga.alt[r.vehicle])) {
      best[r.vehicle] = r.duration;
      ga.alt[r.vehicle] = r.alt;
    }
  return ga;
}

GlobalAssignment baseline_random(std::span<const Route> routes, std::uint64_t seed) {
  const auto counts = alternatives_per_vehicle(routes);
  std::mt19937_64 rng(seed);
  GlobalAssignment ga{std::vector<std::size_t>(counts.size(), 0), std::vector<std::string>(counts.size(), "random")};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) throw ValidationError(fmt::format("vehicle {} has no routes", i));
    ga.alt[i] = std::uniform_int_distribution<std::size_t>(0, counts[i] - 1)(rng);
  }
  return ga;
}

double improvement_vs_baseline(double cost_opt, double cost_base) {
  if (cost_base == 0.0) {
    if (cost_opt == 0.0) return 0.0;
    throw ValidationError("improvement undefined for a zero baseline cost");
  }
  return 100.0 * (cost_base - cost_opt) / cost_base;
}

std::map<std::size_t, std::size_t> overlap_degrees(const CongestionWeights& weights) {
  std::set<std::pair<VehicleId, VehicleId>> pairs;
  for (const auto& [k, v] : weights.w)
    if (v > 0.0) pairs.emplace(k.i, k.j);
  std::vector<std::size_t> degree(weights.vehicle_count(), 0);
  for (const auto& [i, j] : pairs) {
    ++degree.at(i);
    ++degree.at(j);
  }
  std::map<std::size_t, std::size_t> hist;
  for (std::size_t d : degree) ++hist[d];
  return hist;
}

std::vector<double> edge_heatmap(const RoadNetwork& net, std::span<const Route> routes, const GlobalAssignment& ga,
                                 double window, double gamma) {
  std::vector<Route> chosen;
  for (const Route& r : routes)
    if (r.vehicle < ga.size() && ga.alt[r.vehicle] == r.alt) chosen.push_back(r);
  std::vector<double> scores(net.edge_count(), 0.0);
  if (chosen.empty()) return scores;
  for (const auto& e : detect_conflicts(net, chosen, chosen.front().alpha, window, gamma)) scores[e.edge] += e.score;
  return scores;
}

void write_heatmap_csv(std::ostream& out, const RoadNetwork& net, std::span<const double> scores) {
  out << "edge_id,score\n";
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) fmt::print(out, "{},{}\n", net.edge(e).id, scores[e]);
}

void write_heatmap_geojson(std::ostream& out, const RoadNetwork& net, std::span<const double> scores) {
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    nlohmann::ordered_json coords = nlohmann::ordered_json::array();
    for (const LatLon& p : net.edge(e).geometry) coords.push_back({p.lon, p.lat});
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", std::move(coords)}}},
                        {"properties", {{"edge_id", net.edge(e).id}, {"score", scores[e]}}}});
  }
  nlohmann::ordered_json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  out << doc.dump(1) << '\n';
}

void write_assignment(std::ostream& out, const GlobalAssignment& ga) {
  out << "vehicle_id,alt,provenance\n";
  for (std::size_t i = 0; i < ga.size(); ++i) fmt::print(out, "{},{},{}\n", i, ga.alt[i], ga.provenance[i]);
}

GlobalAssignment read_assignment(std::istream& in) {
  const CsvTable t = read_csv(in, {"vehicle_id", "alt", "provenance"});
  GlobalAssignment ga;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = r + 2;
    if (parse_count(t.rows[r][0], line) != r) throw ParseError("assignment rows must list vehicles in order", line);
    ga.alt.push_back(parse_count(t.rows[r][1], line));
    ga.provenance.push_back(t.rows[r][2]);
  }
  return ga;
}

EvaluationReport evaluate(const CongestionWeights& weights, const GlobalAssignment& ga, const ClusterSet& clusters,
                          std::span<const Route> routes, std::uint64_t random_seed) {
  EvaluationReport r;
  r.total_cost = congestion_cost(weights, ga);
  double clustered = 0.0;
  for (const auto& c : clusters.clusters) {
    r.cluster_costs.push_back(congestion_cost(weights, ga, c));
    clustered += r.cluster_costs.back();
  }
  r.cross_cluster_cost = r.total_cost - clustered;
  r.shortest_cost = congestion_cost(weights, baseline_shortest(routes));
  r.random_cost = congestion_cost(weights, baseline_random(routes, random_seed));
  r.improvement_vs_shortest = improvement_vs_baseline(r.total_cost, r.shortest_cost);
  r.improvement_vs_random = improvement_vs_baseline(r.total_cost, r.random_cost);
  r.overlap_histogram = overlap_degrees(weights);
  for (const auto& p : ga.provenance) ++r.provenance_counts[p];
  return r;
}

nlohmann::ordered_json to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["total_cost"] = r.total_cost;
  j["cluster_costs"] = r.cluster_costs;
  j["cross_cluster_cost"] = r.cross_cluster_cost;
  j["shortest_cost"] = r.shortest_cost;
  j["random_cost"] = r.random_cost;
  j["improvement_vs_shortest_pct"] = r.improvement_vs_shortest;
  j["improvement_vs_random_pct"] = r.improvement_vs_random;
  j["validity_rate"] = r.validity_rate;
  j["repaired_blocks"] = r.repaired_blocks;
  j["qubo_densities"] = r.qubo_densities;
  nlohmann::ordered_json deltas = nlohmann::ordered_json::array();
  for (const auto& d : r.delta_energies) deltas.push_back({{"a", d.a}, {"b", d.b}, {"value", d.value}});
  j["delta_energy"] = std::move(deltas);
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [d, c] : r.overlap_histogram) hist[std::to_string(d)] = c;
  j["overlap_degrees"] = std::move(hist);
  j["provenance"] = r.provenance_counts;
  return j;
}

}  // namespace tfo
