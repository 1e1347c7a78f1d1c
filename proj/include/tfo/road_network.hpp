#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tfo/geo.hpp"

namespace tfo {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

struct Node {
  std::string id;
  LatLon pos;
};

/// One directed road segment. A two-way road is two Edge values with
/// distinct ids and `oneway == false` on both.
struct Edge {
  std::string id;
  NodeIndex from = 0;
  NodeIndex to = 0;
  std::vector<LatLon> geometry;
  double length_m = 0.0;
  double speed_mps = 0.0;
  bool oneway = true;

  double travel_time() const { return length_m / speed_mps; }
};

/// Immutable directed road graph.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  /// Validates every invariant; throws ValidationError.
  RoadNetwork(std::vector<Node> nodes, std::vector<Edge> edges);

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Edge> edges() const { return edges_; }
  const Node& node(NodeIndex i) const { return nodes_.at(i); }
  const Edge& edge(EdgeIndex e) const { return edges_.at(e); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  std::span<const EdgeIndex> out_edges(NodeIndex n) const { return out_.at(n); }
  std::optional<NodeIndex> find_node(const std::string& id) const;
  std::optional<EdgeIndex> find_edge(const std::string& id) const;

  /// Position of the edge in lexicographic edge-id order.
  std::uint32_t edge_rank(EdgeIndex e) const { return rank_.at(e); }

  /// Summed haversine length of the edge geometry.
  double geometry_length(EdgeIndex e) const { return geom_len_.at(e); }

  /// Point at `fraction` in [0, 1] of the edge's arc length.
  LatLon point_along(EdgeIndex e, double fraction) const;

  /// Arc length in meters (scaled to the edge's stored length) of the
  /// projection of `p` onto the edge geometry.
  double arc_position(EdgeIndex e, LatLon p) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeIndex>> out_;
  std::vector<std::uint32_t> rank_;
  std::vector<double> geom_len_;
  std::vector<std::vector<double>> cum_len_;  // prefix lengths per geometry vertex
  std::unordered_map<std::string, NodeIndex> node_by_id_;
  std::unordered_map<std::string, EdgeIndex> edge_by_id_;
};

struct NetworkSelection {
  LatLon center;
  double radius_km = 0.0;
};

struct GridSpec {
  std::size_t rows = 2;
  std::size_t cols = 2;
  double spacing_m = 100.0;
  double speed_mps = 13.89;
  LatLon origin;  // south-west corner
  std::uint64_t seed = 0;
  /// Relative per-road speed perturbation drawn from the seed; 0 keeps all speeds equal.
  double speed_jitter = 0.0;
};

RoadNetwork read_network(std::istream& in);
void write_network(std::ostream& out, const RoadNetwork& net);
RoadNetwork load_network(const std::filesystem::path& path);
void save_network(const std::filesystem::path& path, const RoadNetwork& net);

/// Deterministic 4-neighbour grid with two-way roads.
RoadNetwork generate_grid(const GridSpec& spec);

/// Subgraph of nodes within the selection radius and edges with both ends kept.
RoadNetwork clip_network(const RoadNetwork& net, const NetworkSelection& sel);

}  // namespace tfo
