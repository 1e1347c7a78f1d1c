#include "tfo/road_network.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "tfo/error.hpp"
#include "tfo/text.hpp"

namespace tfo {

namespace {

constexpr double kGeometryTolerance = 0.005;
constexpr double kEndpointToleranceM = 0.01;

double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

}  // namespace

RoadNetwork::RoadNetwork(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    if (!node_by_id_.emplace(nodes_[i].id, i).second)
      throw ValidationError("duplicate node id '" + nodes_[i].id + "'");
  }
  out_.resize(nodes_.size());
  geom_len_.resize(edges_.size());
  cum_len_.resize(edges_.size());
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    if (!edge_by_id_.emplace(ed.id, e).second)
      throw ValidationError("duplicate edge id '" + ed.id + "'");
    if (ed.from >= nodes_.size() || ed.to >= nodes_.size())
      throw ValidationError("edge '" + ed.id + "' references a missing node");
    if (!(ed.length_m > 0.0)) throw ValidationError("edge '" + ed.id + "' has non-positive length");
    if (!(ed.speed_mps > 0.0)) throw ValidationError("edge '" + ed.id + "' has non-positive speed");
    if (ed.geometry.size() < 2) throw ValidationError("edge '" + ed.id + "' geometry needs >= 2 points");
    if (haversine(ed.geometry.front(), nodes_[ed.from].pos) > kEndpointToleranceM ||
        haversine(ed.geometry.back(), nodes_[ed.to].pos) > kEndpointToleranceM)
      throw ValidationError("edge '" + ed.id + "' geometry endpoints do not match its nodes");

    auto& cum = cum_len_[e];
    cum.assign(ed.geometry.size(), 0.0);
    for (std::size_t s = 1; s < ed.geometry.size(); ++s)
      cum[s] = cum[s - 1] + haversine(ed.geometry[s - 1], ed.geometry[s]);
    geom_len_[e] = cum.back();
    if (std::abs(geom_len_[e] - ed.length_m) > kGeometryTolerance * ed.length_m)
      throw ValidationError(fmt::format("edge '{}' geometry length {} differs from stored length {}",
                                        ed.id, geom_len_[e], ed.length_m));
    out_[ed.from].push_back(e);
  }
  for (const Edge& ed : edges_) {
    if (ed.oneway) continue;
    const bool twin = std::ranges::any_of(out_[ed.to], [&](EdgeIndex r) {
      return edges_[r].to == ed.from && !edges_[r].oneway;
    });
    if (!twin) throw ValidationError("two-way edge '" + ed.id + "' has no reverse edge");
  }

  std::vector<EdgeIndex> order(edges_.size());
  std::iota(order.begin(), order.end(), EdgeIndex{0});
  std::ranges::sort(order, [&](EdgeIndex a, EdgeIndex b) { return edges_[a].id < edges_[b].id; });
  rank_.resize(edges_.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) rank_[order[r]] = r;
}

std::optional<NodeIndex> RoadNetwork::find_node(const std::string& id) const {
  auto it = node_by_id_.find(id);
  if (it == node_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeIndex> RoadNetwork::find_edge(const std::string& id) const {
  auto it = edge_by_id_.find(id);
  if (it == edge_by_id_.end()) return std::nullopt;
  return it->second;
}

LatLon RoadNetwork::point_along(EdgeIndex e, double fraction) const {
  const auto& geom = edges_.at(e).geometry;
  const auto& cum = cum_len_.at(e);
  const double target = std::clamp(fraction, 0.0, 1.0) * cum.back();
  if (target >= cum.back()) return geom.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), target);
  const std::size_t s = static_cast<std::size_t>(it - cum.begin());  // segment (s-1, s)
  const double seg = cum[s] - cum[s - 1];
  const double t = seg > 0.0 ? (target - cum[s - 1]) / seg : 0.0;
  return lerp(geom[s - 1], geom[s], t);
}

double RoadNetwork::arc_position(EdgeIndex e, LatLon p) const {
  const auto& geom = edges_.at(e).geometry;
  const auto& cum = cum_len_.at(e);
  // Local planar frame: longitude scaled by cos(latitude) so both axes share units.
  const double kx = std::cos(geom.front().lat * std::numbers::pi / 180.0);
  double best_d2 = std::numeric_limits<double>::infinity();
  double best_arc = 0.0;
  for (std::size_t s = 1; s < geom.size(); ++s) {
    const double ax = geom[s - 1].lon * kx, ay = geom[s - 1].lat;
    const double bx = geom[s].lon * kx, by = geom[s].lat;
    const double px = p.lon * kx, py = p.lat;
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double qx = ax + t * dx - px, qy = ay + t * dy - py;
    const double d2 = qx * qx + qy * qy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best_arc = cum[s - 1] + t * (cum[s] - cum[s - 1]);
    }
  }
  const double total = cum.back();
  return total > 0.0 ? best_arc * (edges_[e].length_m / total) : 0.0;
}

RoadNetwork read_network(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> tok;

  auto expect_header = [&](std::string_view name) -> std::size_t {
    if (!reader.next(tok)) throw ParseError("missing " + std::string(name) + " header", reader.line());
    if (tok.size() != 2 || tok[0] != name)
      throw ParseError("expected '" + std::string(name) + " <count>'", reader.line());
    return parse_count(tok[1], reader.line());
  };

  const std::size_t n = expect_header("NODES");
  std::vector<Node> nodes;
  nodes.reserve(n);
  std::unordered_map<std::string, NodeIndex> ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (!reader.next(tok)) throw ParseError("unexpected end of file in NODES", reader.line());
    if (tok.size() != 3) throw ParseError("node line needs 'id lat lon'", reader.line());
    Node node{std::string(tok[0]),
              {parse_double(tok[1], reader.line()), parse_double(tok[2], reader.line())}};
    if (!ids.emplace(node.id, static_cast<NodeIndex>(i)).second)
      throw ParseError("duplicate node id '" + node.id + "'", reader.line());
    nodes.push_back(std::move(node));
  }

  const std::size_t m = expect_header("EDGES");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!reader.next(tok)) throw ParseError("unexpected end of file in EDGES", reader.line());
    if (tok.size() < 7) throw ParseError("edge line too short", reader.line());
    Edge e;
    e.id = std::string(tok[0]);
    auto lookup = [&](std::string_view id) {
      auto it = ids.find(std::string(id));
      if (it == ids.end())
        throw ParseError("dangling node reference '" + std::string(id) + "'", reader.line());
      return it->second;
    };
    e.from = lookup(tok[1]);
    e.to = lookup(tok[2]);
    e.length_m = parse_double(tok[3], reader.line());
    e.speed_mps = parse_double(tok[4], reader.line());
    if (!(e.length_m > 0.0)) throw ParseError("non-positive length on edge '" + e.id + "'", reader.line());
    if (!(e.speed_mps > 0.0)) throw ParseError("non-positive speed on edge '" + e.id + "'", reader.line());
    if (tok[5] != "0" && tok[5] != "1") throw ParseError("oneway flag must be 0 or 1", reader.line());
    e.oneway = tok[5] == "1";
    const std::size_t k = parse_count(tok[6], reader.line());
    if (tok.size() != 7 + 2 * k) throw ParseError("geometry point count mismatch", reader.line());
    for (std::size_t p = 0; p < k; ++p)
      e.geometry.push_back({parse_double(tok[7 + 2 * p], reader.line()),
                            parse_double(tok[8 + 2 * p], reader.line())});
    edges.push_back(std::move(e));
  }
  if (reader.next(tok)) throw ParseError("trailing content after EDGES block", reader.line());

  try {
    return RoadNetwork(std::move(nodes), std::move(edges));
  } catch (const ValidationError& err) {
    throw ParseError(err.what(), 0);
  }
}

void write_network(std::ostream& out, const RoadNetwork& net) {
  fmt::print(out, "# road network\nNODES {}\n", net.node_count());
  for (const Node& n : net.nodes()) fmt::print(out, "{} {} {}\n", n.id, n.pos.lat, n.pos.lon);
  fmt::print(out, "EDGES {}\n", net.edge_count());
  for (const Edge& e : net.edges()) {
    fmt::print(out, "{} {} {} {} {} {} {}", e.id, net.node(e.from).id, net.node(e.to).id, e.length_m,
               e.speed_mps, e.oneway ? 1 : 0, e.geometry.size());
    for (const LatLon& p : e.geometry) fmt::print(out, " {} {}", p.lat, p.lon);
    out << '\n';
  }
}

RoadNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open network file " + path.string());
  return read_network(in);
}

void save_network(const std::filesystem::path& path, const RoadNetwork& net) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write network file " + path.string());
  write_network(out, net);
}

RoadNetwork generate_grid(const GridSpec& spec) {
  if (spec.rows < 2 || spec.cols < 2) throw ValidationError("grid needs at least 2 rows and 2 cols");
  if (!(spec.spacing_m > 0.0)) throw ValidationError("grid spacing must be positive");
  if (!(spec.speed_mps > 0.0)) throw ValidationError("grid speed must be positive");
  if (spec.speed_jitter < 0.0 || spec.speed_jitter >= 1.0)
    throw ValidationError("speed jitter must be in [0, 1)");

  const double dlat = rad2deg(spec.spacing_m / kEarthRadiusMeters);
  const double dlon =
      rad2deg(spec.spacing_m / (kEarthRadiusMeters * std::cos(spec.origin.lat * std::numbers::pi / 180.0)));

  std::vector<Node> nodes;
  nodes.reserve(spec.rows * spec.cols);
  for (std::size_t r = 0; r < spec.rows; ++r)
    for (std::size_t c = 0; c < spec.cols; ++c)
      nodes.push_back({std::to_string(r * spec.cols + c),
                       {spec.origin.lat + static_cast<double>(r) * dlat,
                        spec.origin.lon + static_cast<double>(c) * dlon}});

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::vector<Edge> edges;
  auto add_road = [&](NodeIndex a, NodeIndex b) {
    const double len = haversine(nodes[a].pos, nodes[b].pos);
    const double speed =
        spec.speed_jitter > 0.0 ? spec.speed_mps * (1.0 + spec.speed_jitter * jitter(rng)) : spec.speed_mps;
    for (auto [u, v] : {std::pair{a, b}, std::pair{b, a}}) {
      edges.push_back(Edge{std::to_string(edges.size()), u, v, {nodes[u].pos, nodes[v].pos}, len, speed, false});
    }
  };
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const auto here = static_cast<NodeIndex>(r * spec.cols + c);
      if (c + 1 < spec.cols) add_road(here, here + 1);
      if (r + 1 < spec.rows) add_road(here, static_cast<NodeIndex>(here + spec.cols));
    }
  }
  return RoadNetwork(std::move(nodes), std::move(edges));
}

RoadNetwork clip_network(const RoadNetwork& net, const NetworkSelection& sel) {
  if (!(sel.radius_km > 0.0)) throw ValidationError("selection radius must be positive");
  const double radius_m = sel.radius_km * 1000.0;
  std::vector<std::optional<NodeIndex>> remap(net.node_count());
  std::vector<Node> nodes;
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    if (haversine(net.node(i).pos, sel.center) <= radius_m) {
      remap[i] = static_cast<NodeIndex>(nodes.size());
      nodes.push_back(net.node(i));
    }
  }
  if (nodes.empty()) throw ValidationError("network selection is empty");
  std::vector<Edge> edges;
  for (const Edge& e : net.edges()) {
    if (remap[e.from] && remap[e.to]) {
      Edge copy = e;
      copy.from = *remap[e.from];
      copy.to = *remap[e.to];
      edges.push_back(std::move(copy));
    }
  }
  return RoadNetwork(std::move(nodes), std::move(edges));
}

}  // namespace tfo
