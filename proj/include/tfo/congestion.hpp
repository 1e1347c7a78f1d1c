#pragma once

#include <compare>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "tfo/geo.hpp"
#include "tfo/routing.hpp"

namespace tfo {

/// Per-step congestion score in seconds: alpha * max(1 - d / (gamma * vbar), 0)
/// with vbar the mean speed. When both vehicles are stopped the score is
/// alpha if co-located and 0 otherwise.
double pair_score(double distance_m, double v_leader, double v_follower, double alpha, double gamma);

/// Accumulated leader-follower score on one directed edge for one
/// combination of alternatives.
struct CongestionEntry {
  EdgeIndex edge = 0;
  VehicleId leader = 0;
  VehicleId follower = 0;
  std::size_t alt_leader = 0;
  std::size_t alt_follower = 0;
  double score = 0.0;
};

/// Groups route points by directed edge at every time step in [0, window]
/// and accumulates pair scores per (edge, leader, follower, alternatives).
/// The leader is the vehicle with the larger arc position along the edge;
/// equal positions make the lower vehicle id the leader. Output is sorted by
/// key. Throws ValidationError if any route was sampled with a different alpha.
std::vector<CongestionEntry> detect_conflicts(const RoadNetwork& net, std::span<const Route> routes, double alpha,
                                              double window, double gamma);

/// Key of the symmetrized weight tensor; always `i < j`.
struct WeightKey {
  VehicleId i = 0;
  VehicleId j = 0;
  std::uint32_t a = 0;  // alternative of i
  std::uint32_t b = 0;  // alternative of j

  friend auto operator<=>(const WeightKey&, const WeightKey&) = default;
};

/// Sparse congestion tensor plus duration penalties. Missing keys are zero.
struct CongestionWeights {
  std::map<WeightKey, double> w;
  /// penalties[i][a] = duration(i, a) - min_b duration(i, b); size = real alternatives.
  std::vector<std::vector<double>> penalties;

  std::size_t vehicle_count() const { return penalties.size(); }
  std::size_t alternatives(VehicleId i) const { return penalties.at(i).size(); }

  /// w[i, j, a, b] for any ordered pair of distinct vehicles.
  double weight(VehicleId i, VehicleId j, std::uint32_t a, std::uint32_t b) const;

  /// Adds `value` at the canonical (i < j) key of the ordered quadruple.
  void add(VehicleId i, VehicleId j, std::uint32_t a, std::uint32_t b, double value);
};

/// Sums entries over edges with both orderings folded onto i < j, and derives
/// duration penalties from the routes.
CongestionWeights build_weights(std::span<const CongestionEntry> entries, std::span<const Route> routes);

/// Duration penalties only, from route durations.
std::vector<std::vector<double>> duration_penalties(std::span<const Route> routes);

void write_weights(std::ostream& out, const CongestionWeights& w);
void write_penalties(std::ostream& out, const CongestionWeights& w);
CongestionWeights read_weights(std::istream& weights, std::istream& penalties);

}  // namespace tfo
