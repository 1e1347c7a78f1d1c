#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "tfo/congestion.hpp"

namespace tfo {

/// Undirected vehicle graph weighted by summed congestion over all
/// alternative pairs. Only vehicles with at least one positive edge are nodes.
struct ConflictGraph {
  std::size_t vehicle_count = 0;  // size of the full vehicle set
  std::vector<VehicleId> vehicles;  // node -> vehicle id, ascending
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // sorted by neighbor

  std::size_t node_count() const { return vehicles.size(); }
  double degree(std::uint32_t u) const;
  double total_weight() const;  // each edge counted once
};

ConflictGraph build_conflict_graph(const CongestionWeights& weights);

/// Community label per graph node.
using Partition = std::vector<std::uint32_t>;

/// Resolution-scaled modularity:
/// sum_c [ in_c / m - rho * (K_c / 2m)^2 ] with in_c the internal edge weight.
double modularity(const ConflictGraph& g, const Partition& p, double rho);

/// Leiden community detection (fast local moving, refinement, aggregation)
/// on resolution-scaled modularity. Communities are connected and labelled
/// 0.. in order of their smallest node. Deterministic for a fixed seed.
Partition leiden(const ConflictGraph& g, double rho, std::uint64_t seed);

struct ClusterSet {
  std::vector<std::vector<VehicleId>> clusters;
  std::vector<VehicleId> residual;
  double rho = 0.0;
  std::size_t min_size = 1;
  std::size_t max_clusters = 1;
};

/// Enforces the minimum size by merging each undersized cluster into the
/// neighbour with the largest inter-cluster weight (isolated ones are batched
/// together), then keeps the `max_clusters` clusters with the largest internal
/// weight. Everything else, including vehicles outside the graph, is residual.
ClusterSet merge_and_filter(const Partition& p, const ConflictGraph& g, std::size_t min_size,
                            std::size_t max_clusters);

/// Single cluster with every vehicle; used when clustering is disabled.
ClusterSet single_cluster(std::size_t vehicle_count);

void write_clusters(std::ostream& out, const ClusterSet& cs, std::size_t vehicle_count);
ClusterSet read_clusters(std::istream& in);

/// Sum over clusters of |C|^2.
double squared_cluster_mass(const ClusterSet& cs);

}  // namespace tfo
