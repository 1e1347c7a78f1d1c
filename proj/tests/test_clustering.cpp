#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "tfo/clustering.hpp"
#include "tfo/error.hpp"

using namespace tfo;

namespace {

struct WEdge {
  std::uint32_t u, v;
  double w;
};

ConflictGraph graph_of(std::size_t n, const std::vector<WEdge>& edges) {
  ConflictGraph g;
  g.vehicle_count = n;
  for (std::size_t i = 0; i < n; ++i) g.vehicles.push_back(static_cast<VehicleId>(i));
  g.adj.resize(n);
  for (const auto& e : edges) {
    g.adj[e.u].push_back({e.v, e.w});
    g.adj[e.v].push_back({e.u, e.w});
  }
  for (auto& a : g.adj) std::ranges::sort(a);
  return g;
}

/// Dense-matrix modularity, written independently of the library.
double modularity_oracle(std::size_t n, const std::vector<WEdge>& edges, const Partition& p, double rho) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (const auto& e : edges) {
    a[e.u][e.v] += e.w;
    a[e.v][e.u] += e.w;
  }
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      k[i] += a[i][j];
      two_m += a[i][j];
    }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (p[i] == p[j]) q += a[i][j] - rho * k[i] * k[j] / two_m;
  return q / two_m;
}

std::vector<WEdge> two_cliques() {
  std::vector<WEdge> e;
  for (std::uint32_t base : {0u, 5u})
    for (std::uint32_t i = 0; i < 5; ++i)
      for (std::uint32_t j = i + 1; j < 5; ++j) e.push_back({base + i, base + j, 1.0});
  e.push_back({4, 5, 1.0});
  return e;
}

std::vector<WEdge> random_edges(std::size_t n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<WEdge> e;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (u(rng) < p) e.push_back({i, j, 1.0 + std::floor(u(rng) * 20.0)});
  return e;
}

bool community_connected(const ConflictGraph& g, const Partition& p, std::uint32_t c) {
  std::vector<std::uint32_t> members;
  for (std::uint32_t u = 0; u < p.size(); ++u)
    if (p[u] == c) members.push_back(u);
  if (members.empty()) return true;
  std::set<std::uint32_t> seen{members[0]};
  std::vector<std::uint32_t> stack{members[0]};
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto [v, w] : g.adj[u])
      if (p[v] == c && seen.insert(v).second) stack.push_back(v);
  }
  return seen.size() == members.size();
}

}  // namespace

TEST_CASE("conflict graph construction") {
  CongestionWeights empty;
  empty.penalties.assign(4, {0.0, 0.0});
  const ConflictGraph none = build_conflict_graph(empty);
  CHECK(none.node_count() == 0);
  CHECK(none.vehicle_count == 4);

  CongestionWeights pair = empty;
  pair.add(0, 1, 0, 1, 3.0);
  pair.add(1, 0, 0, 0, 4.0);
  const ConflictGraph one = build_conflict_graph(pair);
  REQUIRE(one.node_count() == 2);
  CHECK(one.adj[0] == std::vector<std::pair<std::uint32_t, double>>{{1, 7.0}});
  CHECK(one.total_weight() == 7.0);
  CHECK(one.degree(1) == 7.0);

  CongestionWeights tri = empty;
  tri.add(0, 2, 0, 0, 1.0);
  tri.add(2, 3, 1, 0, 2.0);
  tri.add(0, 3, 1, 1, 4.0);
  const ConflictGraph t = build_conflict_graph(tri);
  CHECK(t.vehicles == std::vector<VehicleId>{0, 2, 3});
  for (std::uint32_t u = 0; u < 3; ++u) CHECK(t.adj[u].size() == 2);
  CHECK(t.total_weight() == 7.0);
  CHECK(t.degree(0) == 5.0);
}

TEST_CASE("modularity matches a dense-matrix evaluation") {
  std::mt19937_64 rng(2);
  const auto edges = random_edges(12, 0.3, rng);
  const ConflictGraph g = graph_of(12, edges);
  std::uniform_int_distribution<std::uint32_t> lab(0, 3);
  for (int t = 0; t < 20; ++t) {
    Partition p(12);
    for (auto& x : p) x = lab(rng);
    for (double rho : {0.5, 1.0, 4.0})
      CHECK(modularity(g, p, rho) == doctest::Approx(modularity_oracle(12, edges, p, rho)).epsilon(1e-12));
  }
}

TEST_CASE("two 5-cliques joined by a unit edge") {
  const auto edges = two_cliques();
  const ConflictGraph g = graph_of(10, edges);
  const Partition p = leiden(g, 1.0, 0);
  CHECK(p == Partition{0, 0, 0, 0, 0, 1, 1, 1, 1, 1});

  // Exhaustive search over all set partitions of 10 nodes (restricted growth strings).
  Partition cur(10, 0), best;
  double best_q = -1e9;
  std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t i, std::uint32_t used) {
    if (i == 10) {
      const double q = modularity_oracle(10, edges, cur, 1.0);
      if (q > best_q + 1e-12) {
        best_q = q;
        best = cur;
      }
      return;
    }
    for (std::uint32_t c = 0; c <= used; ++c) {
      cur[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  cur[0] = 0;
  rec(1, 1);
  CHECK(best == p);
  CHECK(modularity(g, p, 1.0) == doctest::Approx(best_q).epsilon(1e-12));
}

TEST_CASE("disconnected graph and single node") {
  const ConflictGraph g = graph_of(6, {{0, 1, 1.0}, {1, 2, 1.0}, {3, 4, 2.0}});
  const Partition p = leiden(g, 0.1, 3);  // low resolution favours merging
  CHECK(p[0] == p[1]);
  CHECK(p[1] == p[2]);
  CHECK(p[3] == p[4]);
  CHECK(p[0] != p[3]);
  CHECK(p[5] != p[0]);
  CHECK(p[5] != p[3]);

  const ConflictGraph single = graph_of(1, {});
  CHECK(leiden(single, 1.0, 0) == Partition{0});
  CHECK(leiden(graph_of(0, {}), 1.0, 0).empty());
  CHECK_THROWS_AS(leiden(single, 0.0, 0), ValidationError);
}

TEST_CASE("leiden on random graphs: connected, labelled, deterministic, no worse than trivial partitions") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 25; ++t) {
    const std::size_t n = 20 + t * 7;
    const auto edges = random_edges(n, 3.0 / static_cast<double>(n), rng);
    const ConflictGraph g = graph_of(n, edges);
    const double rho = 0.5 + (t % 4);
    const Partition p = leiden(g, rho, static_cast<std::uint64_t>(t));
    REQUIRE(p.size() == n);
    CHECK(leiden(g, rho, static_cast<std::uint64_t>(t)) == p);
    std::uint32_t next = 0;
    for (auto c : p) {
      CHECK(c <= next);  // labels appear in order of smallest node
      if (c == next) ++next;
    }
    for (std::uint32_t c = 0; c < next; ++c) CHECK(community_connected(g, p, c));
    Partition singles(n), whole(n, 0);
    for (std::uint32_t u = 0; u < n; ++u) singles[u] = u;
    const double q = modularity(g, p, rho);
    CHECK(q >= modularity(g, singles, rho) - 1e-12);
    CHECK(q >= modularity(g, whole, rho) - 1e-12);
  }
}

TEST_CASE("merge: already satisfied partition is unchanged") {
  const ConflictGraph g = graph_of(10, two_cliques());
  const ClusterSet cs = merge_and_filter({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, g, 5, 2);
  CHECK(cs.clusters == std::vector<std::vector<VehicleId>>{{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}});
  CHECK(cs.residual.empty());
}

TEST_CASE("merge: undersized cluster joins the heaviest neighbour") {
  const ConflictGraph g = graph_of(7, {{0, 1, 5.0}, {0, 4, 9.0}, {1, 2, 1.0}, {2, 3, 1.0}, {4, 5, 1.0}, {5, 6, 1.0}});
  const ClusterSet cs = merge_and_filter({0, 1, 1, 1, 2, 2, 2}, g, 2, 5);
  CHECK(cs.clusters == std::vector<std::vector<VehicleId>>{{0, 4, 5, 6}, {1, 2, 3}});
  CHECK(cs.residual.empty());
}

TEST_CASE("merge: 30 isolated singletons, m=10, L=2") {
  const ConflictGraph g = graph_of(30, {});
  Partition p(30);
  for (std::uint32_t u = 0; u < 30; ++u) p[u] = u;
  const ClusterSet cs = merge_and_filter(p, g, 10, 2);
  REQUIRE(cs.clusters.size() == 2);
  std::vector<VehicleId> first(10), second(10), rest(10);
  for (VehicleId v = 0; v < 10; ++v) {
    first[v] = v;
    second[v] = v + 10;
    rest[v] = v + 20;
  }
  CHECK(cs.clusters[0] == first);
  CHECK(cs.clusters[1] == second);
  CHECK(cs.residual == rest);
  CHECK(squared_cluster_mass(cs) == 200.0);
}

TEST_CASE("merge: vehicles outside the graph are residual, sizes respected") {
  std::mt19937_64 rng(7);
  const auto edges = random_edges(60, 0.05, rng);
  ConflictGraph g = graph_of(60, edges);
  g.vehicle_count = 70;
  const Partition p = leiden(g, 2.0, 1);
  const ClusterSet cs = merge_and_filter(p, g, 8, 3);
  CHECK(cs.clusters.size() <= 3);
  std::set<VehicleId> all;
  std::size_t total = 0;
  for (const auto& c : cs.clusters) {
    CHECK(c.size() >= 8);
    CHECK(std::ranges::is_sorted(c));
    all.insert(c.begin(), c.end());
    total += c.size();
  }
  for (VehicleId v = 60; v < 70; ++v) CHECK(std::ranges::binary_search(cs.residual, v));
  all.insert(cs.residual.begin(), cs.residual.end());
  total += cs.residual.size();
  CHECK(all.size() == 70);
  CHECK(total == 70);
  CHECK(squared_cluster_mass(cs) <= 70.0 * 70.0);
  CHECK_THROWS_AS(merge_and_filter(p, g, 0, 3), ValidationError);
  CHECK_THROWS_AS(merge_and_filter(p, g, 8, 0), ValidationError);
  CHECK_THROWS_AS(merge_and_filter(Partition(3, 0), g, 8, 3), ValidationError);
}

TEST_CASE("single cluster and clusters file round trip") {
  const ClusterSet one = single_cluster(4);
  CHECK(one.clusters == std::vector<std::vector<VehicleId>>{{0, 1, 2, 3}});
  CHECK(squared_cluster_mass(one) == 16.0);

  ClusterSet cs;
  cs.clusters = {{0, 3}, {1, 4, 5}};
  cs.residual = {2, 6};
  std::stringstream s;
  write_clusters(s, cs, 7);
  CHECK(s.str().rfind("vehicle_id,cluster_id\n0,0\n1,1\n2,-1\n", 0) == 0);
  const ClusterSet back = read_clusters(s);
  CHECK(back.clusters == cs.clusters);
  CHECK(back.residual == cs.residual);

  std::istringstream gap("vehicle_id,cluster_id\n0,0\n1,2\n");
  CHECK_THROWS(read_clusters(gap));
}
