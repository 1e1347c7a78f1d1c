#include "tfo/routing.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>

#include "tfo/error.hpp"
#include "tfo/text.hpp"

namespace tfo {

namespace {

constexpr double kTieTolerance = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool near(double a, double b) { return std::abs(a - b) <= kTieTolerance * std::max({1.0, std::abs(a), std::abs(b)}); }

/// Shortest-path helper over a graph with banned nodes and edges.
class SpurSearch {
 public:
  explicit SpurSearch(const RoadNetwork& net) : net_(net), in_(net.node_count()) {
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) in_[net.edge(e).to].push_back(e);
  }

  /// Lexicographically smallest (by edge rank) among the minimum-time paths.
  std::optional<Path> shortest(NodeIndex src, NodeIndex dst, const std::vector<char>& banned_node,
                               const std::vector<char>& banned_edge) const {
    std::vector<double> dist(net_.node_count(), kInf);
    using Item = std::pair<double, NodeIndex>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[dst] = 0.0;
    pq.push({0.0, dst});
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (d > dist[v]) continue;
      for (EdgeIndex e : in_[v]) {
        if (banned_edge[e]) continue;
        const NodeIndex u = net_.edge(e).from;
        if (banned_node[u]) continue;
        const double nd = d + net_.edge(e).travel_time();
        if (nd < dist[u]) {
          dist[u] = nd;
          pq.push({nd, u});
        }
      }
    }
    if (dist[src] == kInf) return std::nullopt;

    Path path;
    NodeIndex u = src;
    while (u != dst) {
      std::optional<EdgeIndex> pick;
      for (EdgeIndex e : net_.out_edges(u)) {
        if (banned_edge[e]) continue;
        const NodeIndex v = net_.edge(e).to;
        if (banned_node[v] || dist[v] == kInf) continue;
        if (!near(net_.edge(e).travel_time() + dist[v], dist[u])) continue;
        if (!pick || net_.edge_rank(e) < net_.edge_rank(*pick)) pick = e;
      }
      if (!pick || path.size() > net_.node_count()) return std::nullopt;
      path.push_back(*pick);
      u = net_.edge(*pick).to;
    }
    return path;
  }

 private:
  const RoadNetwork& net_;
  std::vector<std::vector<EdgeIndex>> in_;
};

bool rank_less(const RoadNetwork& net, const Path& a, const Path& b) {
  return std::ranges::lexicographical_compare(a, b, {}, [&](EdgeIndex e) { return net.edge_rank(e); });
}

}  // namespace

void validate(const RoutingConfig& cfg) {
  if (cfg.k < 1) throw ValidationError("k must be >= 1");
  if (!(cfg.alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(cfg.window >= cfg.alpha)) throw ValidationError("window must be >= alpha");
}

double path_duration(const RoadNetwork& net, std::span<const EdgeIndex> path) {
  double t = 0.0;
  for (EdgeIndex e : path) t += net.edge(e).travel_time();
  return t;
}

std::vector<Path> k_shortest_routes(const RoadNetwork& net, NodeIndex origin, NodeIndex dest, std::size_t k) {
  if (origin >= net.node_count() || dest >= net.node_count()) throw ValidationError("unknown route endpoint");
  if (k < 1) throw ValidationError("k must be >= 1");
  if (origin == dest) return {Path{}};

  SpurSearch search(net);
  std::vector<char> banned_node(net.node_count(), 0);
  std::vector<char> banned_edge(net.edge_count(), 0);

  auto first = search.shortest(origin, dest, banned_node, banned_edge);
  if (!first)
    throw NoPathError(fmt::format("no path from node '{}' to node '{}'", net.node(origin).id, net.node(dest).id));

  std::vector<Path> accepted{*first};
  std::vector<std::pair<double, Path>> candidates;
  std::set<Path> seen{*first};

  while (accepted.size() < k) {
    const Path& prev = accepted.back();
    NodeIndex spur_node = origin;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      std::fill(banned_node.begin(), banned_node.end(), 0);
      std::fill(banned_edge.begin(), banned_edge.end(), 0);
      const auto root = std::span<const EdgeIndex>(prev).first(i);
      for (const Path& p : accepted)
        if (p.size() > i && std::equal(root.begin(), root.end(), p.begin())) banned_edge[p[i]] = 1;
      NodeIndex walk = origin;
      for (EdgeIndex e : root) {
        banned_node[walk] = 1;
        walk = net.edge(e).to;
      }
      if (auto spur = search.shortest(spur_node, dest, banned_node, banned_edge)) {
        Path total(root.begin(), root.end());
        total.insert(total.end(), spur->begin(), spur->end());
        if (seen.insert(total).second) candidates.emplace_back(path_duration(net, total), std::move(total));
      }
      spur_node = net.edge(prev[i]).to;
    }
    if (candidates.empty()) break;

    double best = kInf;
    for (const auto& c : candidates) best = std::min(best, c.first);
    std::size_t pick = candidates.size();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (!near(candidates[c].first, best)) continue;
      if (pick == candidates.size() || rank_less(net, candidates[c].second, candidates[pick].second)) pick = c;
    }
    accepted.push_back(std::move(candidates[pick].second));
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return accepted;
}

Route sample_route(const RoadNetwork& net, std::span<const EdgeIndex> edges, const RoutingConfig& cfg) {
  validate(cfg);
  if (edges.empty()) throw ValidationError("cannot sample an empty path");
  std::vector<double> end_time(edges.size());
  Route route;
  route.alpha = cfg.alpha;
  route.edges.assign(edges.begin(), edges.end());
  double t = 0.0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = net.edge(edges[i]);
    if (i > 0 && net.edge(edges[i - 1]).to != e.from) throw ValidationError("path edges are not connected");
    t += e.travel_time();
    end_time[i] = t;
    route.length += e.length_m;
  }
  route.duration = t;

  const double horizon = std::min(route.duration, cfg.window);
  const auto count = static_cast<std::size_t>(std::floor(horizon / cfg.alpha + 1e-9)) + 1;
  route.points.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double ts = static_cast<double>(s) * cfg.alpha;
    auto it = std::upper_bound(end_time.begin(), end_time.end(), ts);
    std::size_t idx = static_cast<std::size_t>(it - end_time.begin());
    if (idx == edges.size()) idx = edges.size() - 1;
    const Edge& e = net.edge(edges[idx]);
    const double start = idx == 0 ? 0.0 : end_time[idx - 1];
    const double fraction = std::clamp((ts - start) / e.travel_time(), 0.0, 1.0);
    route.points.push_back({ts, net.point_along(edges[idx], fraction), edges[idx], e.speed_mps, e.from, e.to});
  }
  return route;
}

std::vector<Route> route_vehicles(const RoadNetwork& net, const std::vector<Vehicle>& vehicles,
                                  const RoutingConfig& cfg) {
  validate(cfg);
  std::vector<Route> out;
  for (const Vehicle& v : vehicles) {
    const auto paths = k_shortest_routes(net, v.origin, v.destination, cfg.k);
    for (std::size_t a = 0; a < paths.size(); ++a) {
      Route r = sample_route(net, paths[a], cfg);
      r.vehicle = v.id;
      r.alt = a;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<std::size_t> alternatives_per_vehicle(std::span<const Route> routes) {
  std::vector<std::size_t> counts;
  for (const Route& r : routes) {
    if (r.vehicle >= counts.size()) counts.resize(r.vehicle + 1, 0);
    counts[r.vehicle] = std::max(counts[r.vehicle], r.alt + 1);
  }
  return counts;
}

void write_route_points(std::ostream& out, const RoadNetwork& net, std::span<const Route> routes) {
  out << "vehicle_id,alt,t,lat,lon,edge_id,speed,dir_from,dir_to\n";
  for (const Route& r : routes)
    for (const RoutePoint& p : r.points)
      fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", r.vehicle, r.alt, p.t, p.pos.lat, p.pos.lon,
                 net.edge(p.edge).id, p.speed, net.node(p.dir_from).id, net.node(p.dir_to).id);
}

void write_route_summary(std::ostream& out, std::span<const Route> routes) {
  out << "vehicle_id,alt,duration_s,length_m,n_points\n";
  for (const Route& r : routes)
    fmt::print(out, "{},{},{},{},{}\n", r.vehicle, r.alt, r.duration, r.length, r.points.size());
}

void write_route_edges(std::ostream& out, const RoadNetwork& net, std::span<const Route> routes) {
  out << "vehicle_id,alt,edges\n";
  for (const Route& r : routes) {
    fmt::print(out, "{},{},", r.vehicle, r.alt);
    for (std::size_t i = 0; i < r.edges.size(); ++i) out << (i ? " " : "") << net.edge(r.edges[i]).id;
    out << '\n';
  }
}

std::vector<Route> read_routes(std::istream& points, std::istream& summary, std::istream& edges,
                               const RoadNetwork& net, double alpha) {
  const CsvTable s = read_csv(summary, {"vehicle_id", "alt", "duration_s", "length_m", "n_points"});
  std::vector<Route> routes;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
  for (std::size_t r = 0; r < s.rows.size(); ++r) {
    const auto& row = s.rows[r];
    Route route;
    route.vehicle = static_cast<VehicleId>(parse_count(row[0], r + 2));
    route.alt = parse_count(row[1], r + 2);
    route.duration = parse_double(row[2], r + 2);
    route.length = parse_double(row[3], r + 2);
    route.alpha = alpha;
    route.points.reserve(parse_count(row[4], r + 2));
    if (!index.emplace(std::pair{route.vehicle, route.alt}, routes.size()).second)
      throw ParseError("duplicate route in summary", r + 2);
    routes.push_back(std::move(route));
  }

  const CsvTable e = read_csv(edges, {"vehicle_id", "alt", "edges"});
  for (std::size_t r = 0; r < e.rows.size(); ++r) {
    const auto& row = e.rows[r];
    auto it = index.find({parse_count(row[0], r + 2), parse_count(row[1], r + 2)});
    if (it == index.end()) throw ParseError("route edges reference an unknown route", r + 2);
    std::istringstream ids(row[2]);
    std::string id;
    while (ids >> id) {
      auto ei = net.find_edge(id);
      if (!ei) throw ParseError("unknown edge id '" + id + "'", r + 2);
      routes[it->second].edges.push_back(*ei);
    }
  }

  const CsvTable p = read_csv(points, {"vehicle_id", "alt", "t", "lat", "lon", "edge_id", "speed", "dir_from",
                                       "dir_to"});
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const auto& row = p.rows[r];
    const std::size_t line = r + 2;
    auto it = index.find({parse_count(row[0], line), parse_count(row[1], line)});
    if (it == index.end()) throw ParseError("route point references an unknown route", line);
    Route& route = routes[it->second];
    RoutePoint pt;
    pt.t = parse_double(row[2], line);
    if (pt.t != static_cast<double>(route.points.size()) * alpha)
      throw ParseError(fmt::format("route point time {} is not step {} of alpha {}", pt.t, route.points.size(), alpha),
                       line);
    pt.pos = {parse_double(row[3], line), parse_double(row[4], line)};
    auto ei = net.find_edge(row[5]);
    auto from = net.find_node(row[7]);
    auto to = net.find_node(row[8]);
    if (!ei || !from || !to) throw ParseError("route point references unknown edge or node", line);
    pt.edge = *ei;
    pt.speed = parse_double(row[6], line);
    pt.dir_from = *from;
    pt.dir_to = *to;
    route.points.push_back(pt);
  }
  std::ranges::sort(routes, {}, [](const Route& r) { return std::pair{r.vehicle, r.alt}; });
  return routes;
}

}  // namespace tfo
