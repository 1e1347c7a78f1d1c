#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tfo/error.hpp"
#include "tfo/routing.hpp"

using namespace tfo;

namespace {

/// Every loopless path from `o` to `d`, sorted by duration then edge-id sequence.
std::vector<std::pair<double, Path>> all_simple_paths(const RoadNetwork& net, NodeIndex o, NodeIndex d) {
  std::vector<std::pair<double, Path>> out;
  std::vector<char> on(net.node_count(), 0);
  Path cur;
  std::function<void(NodeIndex, double)> dfs = [&](NodeIndex u, double t) {
    if (u == d) {
      out.emplace_back(t, cur);
      return;
    }
    on[u] = 1;
    for (EdgeIndex e : net.out_edges(u)) {
      const NodeIndex v = net.edge(e).to;
      if (on[v]) continue;
      cur.push_back(e);
      dfs(v, t + net.edge(e).length_m / net.edge(e).speed_mps);
      cur.pop_back();
    }
    on[u] = 0;
  };
  dfs(o, 0.0);
  auto ids = [&](const Path& p) {
    std::vector<std::string> s;
    for (EdgeIndex e : p) s.push_back(net.edge(e).id);
    return s;
  };
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return ids(a.second) < ids(b.second);
  });
  return out;
}

bool loopless(const RoadNetwork& net, const Path& p) {
  std::set<NodeIndex> seen{net.edge(p.front()).from};
  for (EdgeIndex e : p)
    if (!seen.insert(net.edge(e).to).second) return false;
  return true;
}

}  // namespace

TEST_CASE("adjacent nodes on a line have one loopless route") {
  const RoadNetwork net = fixture::line(4, 100.0, 10.0);
  const auto paths = k_shortest_routes(net, 1, 2, 2);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].size() == 1);
}

TEST_CASE("2x2 opposite corners gives two equal routes in edge-id order") {
  // Square with every road stored at exactly 100 m; corners sw, se, nw, ne.
  const RoadNetwork net = fixture::parse(
      "NODES 4\n"
      "sw 48.0 21.0\nse 48.0 21.001346\nnw 48.000899321 21.0\nne 48.000899321 21.001346\n"
      "EDGES 8\n"
      "s1 sw se 100 10 0 2 48.0 21.0 48.0 21.001346\n"
      "s2 se sw 100 10 0 2 48.0 21.001346 48.0 21.0\n"
      "w1 sw nw 100 10 0 2 48.0 21.0 48.000899321 21.0\n"
      "w2 nw sw 100 10 0 2 48.000899321 21.0 48.0 21.0\n"
      "e1 se ne 100 10 0 2 48.0 21.001346 48.000899321 21.001346\n"
      "e2 ne se 100 10 0 2 48.000899321 21.001346 48.0 21.001346\n"
      "n1 nw ne 100 10 0 2 48.000899321 21.0 48.000899321 21.001346\n"
      "n2 ne nw 100 10 0 2 48.000899321 21.001346 48.000899321 21.0\n");
  const auto paths = k_shortest_routes(net, *net.find_node("sw"), *net.find_node("ne"), 2);
  REQUIRE(paths.size() == 2);
  CHECK(path_duration(net, paths[0]) == path_duration(net, paths[1]));
  std::vector<std::string> a, b;
  for (EdgeIndex e : paths[0]) a.push_back(net.edge(e).id);
  for (EdgeIndex e : paths[1]) b.push_back(net.edge(e).id);
  CHECK(a == std::vector<std::string>{"s1", "e1"});
  CHECK(b == std::vector<std::string>{"w1", "n1"});
  const auto oracle_paths = all_simple_paths(net, *net.find_node("sw"), *net.find_node("ne"));
  CHECK(paths[0] == oracle_paths[0].second);
  CHECK(paths[1] == oracle_paths[1].second);
}

TEST_CASE("3x3 corner to corner, k=3") {
  const RoadNetwork net = fixture::grid(3, 3);
  const auto paths = k_shortest_routes(net, 0, 8, 3);
  const auto oracle_paths = all_simple_paths(net, 0, 8);
  REQUIRE(paths.size() == 3);
  std::set<Path> distinct(paths.begin(), paths.end());
  CHECK(distinct.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loopless(net, paths[i]));
    CHECK(path_duration(net, paths[i]) == doctest::Approx(oracle_paths[i].first).epsilon(1e-12));
    if (i) CHECK(path_duration(net, paths[i - 1]) <= path_duration(net, paths[i]) + 1e-9);
  }
}

TEST_CASE("with distinct speeds the k routes equal the enumerated k best") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    GridSpec s;
    s.rows = 3;
    s.cols = 4;
    s.spacing_m = 150.0;
    s.seed = seed;
    s.speed_jitter = 0.4;
    s.origin = {48.72, 21.26};
    const RoadNetwork net = generate_grid(s);
    const auto oracle_paths = all_simple_paths(net, 0, 11);
    const auto paths = k_shortest_routes(net, 0, 11, 6);
    REQUIRE(paths.size() == 6);
    for (std::size_t i = 0; i < paths.size(); ++i) CHECK(paths[i] == oracle_paths[i].second);
  }
}

TEST_CASE("fewer than k routes when the graph has fewer") {
  const RoadNetwork net = fixture::line(5, 100.0, 10.0);
  CHECK(k_shortest_routes(net, 0, 4, 5).size() == 1);
}

TEST_CASE("unreachable destination") {
  const RoadNetwork net = fixture::line(3, 100.0, 10.0, false);
  CHECK_THROWS_AS(k_shortest_routes(net, 2, 0, 2), NoPathError);
  CHECK_THROWS_AS(k_shortest_routes(net, 0, 7, 2), ValidationError);
}

TEST_CASE("sampling a single 100 m edge") {
  const RoadNetwork net = fixture::line(2, 100.0, 10.0);
  const Route r = sample_route(net, std::vector<EdgeIndex>{0}, {});
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].t == 0.0);
  CHECK(r.points[1].t == 10.0);
  CHECK(r.points[0].pos == net.node(net.edge(0).from).pos);
  CHECK(r.points[1].pos == net.node(net.edge(0).to).pos);
  CHECK(r.duration == doctest::Approx(net.edge(0).travel_time()));
  CHECK(r.points[0].dir_from == net.edge(0).from);
  CHECK(r.points[0].dir_to == net.edge(0).to);
  CHECK(r.points[0].speed == 10.0);
}

TEST_CASE("point counts follow floor(min(T, w) / alpha) + 1") {
  SUBCASE("95 s") {
    const RoadNetwork net = fixture::line(2, 950.0, 10.0);
    CHECK(sample_route(net, std::vector<EdgeIndex>{0}, {}).points.size() == 10);
  }
  SUBCASE("950 s capped at the window") {
    const RoadNetwork net = fixture::line(2, 9500.0, 10.0);
    const Route r = sample_route(net, std::vector<EdgeIndex>{0}, {});
    CHECK(r.points.size() == 61);
    CHECK(r.points.back().t == 600.0);
  }
}

TEST_CASE("sampling invariants along a multi-edge route") {
  GridSpec s;
  s.rows = 6;
  s.cols = 6;
  s.spacing_m = 170.0;
  s.seed = 4;
  s.speed_jitter = 0.5;
  s.origin = {48.72, 21.26};
  const RoadNetwork net = generate_grid(s);
  const auto paths = k_shortest_routes(net, 0, 35, 3);
  for (const Path& p : paths) {
    const Route r = sample_route(net, p, {});
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(net.edge(p[i - 1]).to == net.edge(p[i]).from);
    double total = 0.0;
    for (EdgeIndex e : p) total += net.edge(e).length_m / net.edge(e).speed_mps;
    CHECK(r.duration == doctest::Approx(total).epsilon(1e-6));
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      const RoutePoint& pt = r.points[i];
      CHECK(pt.t == static_cast<double>(i) * 10.0);
      const Edge& e = net.edge(pt.edge);
      const LatLon a = net.node(e.from).pos, b = net.node(e.to).pos;
      // On a straight edge the point lies on the segment: detour through it is under 1 m.
      const double detour = oracle::cosine_distance(a.lat, a.lon, pt.pos.lat, pt.pos.lon) +
                            oracle::cosine_distance(pt.pos.lat, pt.pos.lon, b.lat, b.lon) - e.length_m;
      CHECK(detour < 1.0);
      if (i > 0 && r.points[i - 1].edge == pt.edge) {
        const LatLon q = r.points[i - 1].pos;
        CHECK(haversine(q, pt.pos) <= pt.speed * 10.0 + 1.0);
      }
    }
    RoutingConfig half;
    half.alpha = 5.0;
    const Route fine = sample_route(net, p, half);
    REQUIRE(fine.points.size() >= 2 * r.points.size() - 1);
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      CHECK(fine.points[2 * i].pos == r.points[i].pos);
      CHECK(fine.points[2 * i].edge == r.points[i].edge);
    }
  }
}

TEST_CASE("routing config validation") {
  CHECK_THROWS_AS(validate(RoutingConfig{0, 10, 600}), ValidationError);
  CHECK_THROWS_AS(validate(RoutingConfig{2, 0, 600}), ValidationError);
  CHECK_THROWS_AS(validate(RoutingConfig{2, 10, 5}), ValidationError);
}

TEST_CASE("route files round trip") {
  const RoadNetwork net = fixture::grid(4, 4, 150.0);
  const std::vector<Vehicle> vehicles{{0, 0, 15}, {1, 3, 12}, {2, 5, 6}};
  const auto routes = route_vehicles(net, vehicles, {});
  CHECK(alternatives_per_vehicle(routes) == std::vector<std::size_t>{2, 2, 2});
  std::stringstream pts, sum, edg;
  write_route_points(pts, net, routes);
  write_route_summary(sum, routes);
  write_route_edges(edg, net, routes);
  const auto back = read_routes(pts, sum, edg, net, 10.0);
  REQUIRE(back.size() == routes.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].vehicle == routes[i].vehicle);
    CHECK(back[i].alt == routes[i].alt);
    CHECK(back[i].edges == routes[i].edges);
    CHECK(back[i].duration == routes[i].duration);
    REQUIRE(back[i].points.size() == routes[i].points.size());
    for (std::size_t p = 0; p < back[i].points.size(); ++p) {
      CHECK(back[i].points[p].pos == routes[i].points[p].pos);
      CHECK(back[i].points[p].edge == routes[i].points[p].edge);
    }
  }
}
