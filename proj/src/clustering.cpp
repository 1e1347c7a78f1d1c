#include "tfo/clustering.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>

#include "tfo/error.hpp"
#include "tfo/text.hpp"

namespace tfo {

double ConflictGraph::degree(std::uint32_t u) const {
  double d = 0.0;
  for (const auto& [v, w] : adj[u]) d += w;
  return d;
}

double ConflictGraph::total_weight() const {
  double t = 0.0;
  for (std::uint32_t u = 0; u < node_count(); ++u) t += degree(u);
  return 0.5 * t;
}

ConflictGraph build_conflict_graph(const CongestionWeights& weights) {
  std::map<std::pair<VehicleId, VehicleId>, double> pair_weight;
  for (const auto& [k, v] : weights.w)
    if (v > 0.0) pair_weight[{k.i, k.j}] += v;

  ConflictGraph g;
  g.vehicle_count = weights.vehicle_count();
  std::vector<std::int64_t> node_of(g.vehicle_count, -1);
  for (const auto& [ij, w] : pair_weight) {
    if (!(w > 0.0)) continue;
    node_of[ij.first] = node_of[ij.second] = 0;
  }
  for (VehicleId v = 0; v < g.vehicle_count; ++v) {
    if (node_of[v] < 0) continue;
    node_of[v] = static_cast<std::int64_t>(g.vehicles.size());
    g.vehicles.push_back(v);
  }
  g.adj.resize(g.vehicles.size());
  for (const auto& [ij, w] : pair_weight) {
    if (!(w > 0.0)) continue;
    const auto a = static_cast<std::uint32_t>(node_of[ij.first]);
    const auto b = static_cast<std::uint32_t>(node_of[ij.second]);
    g.adj[a].emplace_back(b, w);
    g.adj[b].emplace_back(a, w);
  }
  for (auto& list : g.adj) std::ranges::sort(list);
  return g;
}

double modularity(const ConflictGraph& g, const Partition& p, double rho) {
  const double m = g.total_weight();
  if (m <= 0.0) return 0.0;
  std::map<std::uint32_t, std::pair<double, double>> per;  // internal weight, total degree
  for (std::uint32_t u = 0; u < g.node_count(); ++u) {
    auto& [in, deg] = per[p[u]];
    for (const auto& [v, w] : g.adj[u]) {
      deg += w;
      if (p[v] == p[u] && v > u) in += w;
    }
  }
  double q = 0.0;
  for (const auto& [c, s] : per) q += s.first / m - rho * (s.second / (2.0 * m)) * (s.second / (2.0 * m));
  return q;
}

namespace {

/// Working graph for one aggregation level. `self[u]` carries the weight of
/// edges collapsed inside u, already counted twice as in a degree.
struct LevelGraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;
  std::vector<double> self;
  std::vector<double> degree;

  std::size_t size() const { return adj.size(); }
};

LevelGraph base_level(const ConflictGraph& g) {
  LevelGraph lg;
  lg.adj = g.adj;
  lg.self.assign(g.node_count(), 0.0);
  lg.degree.resize(g.node_count());
  for (std::uint32_t u = 0; u < g.node_count(); ++u) lg.degree[u] = g.degree(u);
  return lg;
}

std::uint32_t relabel(std::vector<std::uint32_t>& labels) {
  std::map<std::uint32_t, std::uint32_t> remap;
  for (auto& l : labels) l = remap.emplace(l, static_cast<std::uint32_t>(remap.size())).first->second;
  return static_cast<std::uint32_t>(remap.size());
}

class Leiden {
 public:
  Leiden(double rho, double two_m, std::mt19937_64& rng) : rho_(rho), two_m_(two_m), rng_(rng) {}

  /// Queue-based local moving; returns true if any node moved.
  bool move_nodes(const LevelGraph& g, std::vector<std::uint32_t>& comm) {
    const std::size_t n = g.size();
    std::vector<double> total(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) total[comm[u]] += g.degree[u];

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng_);
    std::deque<std::uint32_t> queue(order.begin(), order.end());
    std::vector<char> queued(n, 1);
    std::vector<double> link(n, 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<std::uint32_t> empty;  // community labels currently unused
    std::vector<std::size_t> members(n, 0);
    for (std::size_t u = 0; u < n; ++u) ++members[comm[u]];
    for (std::uint32_t c = 0; c < n; ++c)
      if (members[c] == 0) empty.push_back(c);

    bool moved_any = false;
    while (!queue.empty()) {
      const std::uint32_t v = queue.front();
      queue.pop_front();
      queued[v] = 0;
      const std::uint32_t own = comm[v];
      const double kv = g.degree[v];

      touched.clear();
      for (const auto& [u, w] : g.adj[v]) {
        if (link[comm[u]] == 0.0) touched.push_back(comm[u]);
        link[comm[u]] += w;
      }
      total[own] -= kv;
      auto gain = [&](std::uint32_t c) { return link[c] - rho_ * kv * total[c] / two_m_; };

      std::uint32_t best = own;
      double best_gain = gain(own);
      for (std::uint32_t c : touched) {
        const double gc = gain(c);
        if (gc > best_gain) {
          best_gain = gc;
          best = c;
        }
      }
      // Leaving for an empty community scores 0.
      if (best_gain < 0.0 && members[own] > 1 && !empty.empty()) {
        best = empty.back();
        best_gain = 0.0;
      }
      total[best] += kv;
      for (std::uint32_t c : touched) link[c] = 0.0;

      if (best != own) {
        if (!empty.empty() && empty.back() == best) empty.pop_back();
        --members[own];
        ++members[best];
        if (members[own] == 0) empty.push_back(own);
        comm[v] = best;
        moved_any = true;
        for (const auto& [u, w] : g.adj[v]) {
          if (!queued[u] && comm[u] != best) {
            queued[u] = 1;
            queue.push_back(u);
          }
        }
      }
    }
    return moved_any;
  }

  /// Refines each community by merging well-connected singletons into
  /// well-connected sub-communities, choosing randomly among non-negative gains.
  std::vector<std::uint32_t> refine(const LevelGraph& g, const std::vector<std::uint32_t>& comm) {
    const std::size_t n = g.size();
    std::vector<std::uint32_t> refined(n);
    std::iota(refined.begin(), refined.end(), 0u);
    std::vector<double> comm_total(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) comm_total[comm[u]] += g.degree[u];

    std::vector<double> ref_total(g.degree);
    std::vector<double> ref_external(n, 0.0);  // weight from the sub-community to the rest of its community
    for (std::uint32_t u = 0; u < n; ++u)
      for (const auto& [v, w] : g.adj[u])
        if (comm[v] == comm[u]) ref_external[u] += w;
    std::vector<char> singleton(n, 1);

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng_);
    std::vector<double> link(n, 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<std::pair<std::uint32_t, double>> candidates;
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    for (std::uint32_t v : order) {
      if (!singleton[v]) continue;
      const std::uint32_t c = comm[v];
      const double kv = g.degree[v];
      const double kc = comm_total[c];
      if (ref_external[refined[v]] < rho_ * kv * (kc - kv) / two_m_) continue;

      touched.clear();
      for (const auto& [u, w] : g.adj[v]) {
        if (comm[u] != c) continue;
        if (link[refined[u]] == 0.0) touched.push_back(refined[u]);
        link[refined[u]] += w;
      }
      candidates.clear();
      candidates.emplace_back(refined[v], 0.0);
      double best_gain = 0.0;
      for (std::uint32_t t : touched) {
        if (t == refined[v]) continue;
        const double kt = ref_total[t];
        if (ref_external[t] < rho_ * kt * (kc - kt) / two_m_) continue;
        const double gain = link[t] - rho_ * kv * kt / two_m_;
        if (gain >= 0.0) {
          candidates.emplace_back(t, gain);
          best_gain = std::max(best_gain, gain);
        }
      }
      std::uint32_t target = refined[v];
      if (candidates.size() > 1) {
        double norm = 0.0;
        for (auto& [t, gain] : candidates) norm += std::exp((gain - best_gain) / kTheta);
        double r = u01(rng_) * norm;
        for (auto& [t, gain] : candidates) {
          r -= std::exp((gain - best_gain) / kTheta);
          target = t;
          if (r <= 0.0) break;
        }
      }
      if (target != refined[v]) {
        const std::uint32_t old = refined[v];
        ref_external[target] += ref_external[old] - 2.0 * link[target];
        ref_total[target] += kv;
        ref_total[old] = 0.0;
        ref_external[old] = 0.0;
        refined[v] = target;
        singleton[v] = 0;
        singleton[target] = 0;  // the target's founding node is no longer alone
      }
      for (std::uint32_t t : touched) link[t] = 0.0;
    }
    return refined;
  }

 private:
  static constexpr double kTheta = 0.01;
  double rho_;
  double two_m_;
  std::mt19937_64& rng_;
};

LevelGraph aggregate(const LevelGraph& g, const std::vector<std::uint32_t>& group, std::uint32_t groups) {
  LevelGraph out;
  out.adj.resize(groups);
  out.self.assign(groups, 0.0);
  out.degree.assign(groups, 0.0);
  std::vector<std::map<std::uint32_t, double>> acc(groups);
  for (std::uint32_t u = 0; u < g.size(); ++u) {
    const std::uint32_t gu = group[u];
    out.self[gu] += g.self[u];
    out.degree[gu] += g.degree[u];
    for (const auto& [v, w] : g.adj[u]) {
      if (group[v] == gu)
        out.self[gu] += w;
      else
        acc[gu][group[v]] += w;
    }
  }
  for (std::uint32_t c = 0; c < groups; ++c) out.adj[c].assign(acc[c].begin(), acc[c].end());
  return out;
}

/// Splits every community into its connected components.
void split_disconnected(const ConflictGraph& g, Partition& p) {
  const std::size_t n = g.node_count();
  Partition out(n, 0);
  std::vector<char> seen(n, 0);
  std::uint32_t next = 0;
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    seen[s] = 1;
    stack.assign(1, s);
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      out[u] = next;
      for (const auto& [v, w] : g.adj[u])
        if (!seen[v] && p[v] == p[u]) {
          seen[v] = 1;
          stack.push_back(v);
        }
    }
    ++next;
  }
  p = std::move(out);
}

}  // namespace

Partition leiden(const ConflictGraph& g, double rho, std::uint64_t seed) {
  if (!(rho > 0.0)) throw ValidationError("resolution must be positive");
  const std::size_t n = g.node_count();
  Partition result(n);
  std::iota(result.begin(), result.end(), 0u);
  const double two_m = 2.0 * g.total_weight();
  if (n == 0 || two_m <= 0.0) return result;

  std::mt19937_64 rng(seed);
  Leiden algo(rho, two_m, rng);
  LevelGraph level = base_level(g);
  std::vector<std::uint32_t> node_to_level(n);  // base node -> node of current level
  std::iota(node_to_level.begin(), node_to_level.end(), 0u);
  std::vector<std::uint32_t> comm(n);
  std::iota(comm.begin(), comm.end(), 0u);

  constexpr int kMaxLevels = 64;
  for (int it = 0; it < kMaxLevels; ++it) {
    algo.move_nodes(level, comm);
    std::vector<std::uint32_t> labels = comm;
    const std::uint32_t communities = relabel(labels);
    if (communities == level.size()) break;

    std::vector<std::uint32_t> refined = algo.refine(level, comm);
    std::uint32_t groups = relabel(refined);
    if (groups == level.size()) {
      refined = labels;  // refinement made no progress; aggregate by community
      groups = communities;
    }
    std::vector<std::uint32_t> next_comm(groups);
    for (std::uint32_t u = 0; u < level.size(); ++u) next_comm[refined[u]] = labels[u];
    level = aggregate(level, refined, groups);
    for (auto& x : node_to_level) x = refined[x];
    comm = std::move(next_comm);
  }
  for (std::size_t u = 0; u < n; ++u) result[u] = comm[node_to_level[u]];
  split_disconnected(g, result);
  return result;
}

ClusterSet merge_and_filter(const Partition& p, const ConflictGraph& g, std::size_t min_size,
                            std::size_t max_clusters) {
  if (min_size < 1 || max_clusters < 1) throw ValidationError("min size and max clusters must be >= 1");
  if (p.size() != g.node_count()) throw ValidationError("partition size does not match the graph");

  // Clusters of graph nodes, ordered by smallest member.
  std::vector<std::vector<std::uint32_t>> clusters;
  {
    std::map<std::uint32_t, std::size_t> index;
    for (std::uint32_t u = 0; u < p.size(); ++u) {
      auto [it, fresh] = index.emplace(p[u], clusters.size());
      if (fresh) clusters.emplace_back();
      clusters[it->second].push_back(u);
    }
  }
  std::vector<std::size_t> owner(g.node_count());
  std::vector<char> active(clusters.size(), 1);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (auto u : clusters[c]) owner[u] = c;

  std::vector<std::size_t> pool;  // undersized clusters without weighted neighbours
  while (true) {
    std::size_t smallest = clusters.size();
    for (std::size_t c = 0; c < clusters.size(); ++c)
      if (active[c] && clusters[c].size() < min_size &&
          (smallest == clusters.size() || clusters[c].size() < clusters[smallest].size()))
        smallest = c;
    if (smallest == clusters.size()) break;

    std::map<std::size_t, double> inter;
    for (auto u : clusters[smallest])
      for (const auto& [v, w] : g.adj[u])
        if (owner[v] != smallest && active[owner[v]]) inter[owner[v]] += w;
    std::size_t target = clusters.size();
    double best = 0.0;
    for (const auto& [c, w] : inter)
      if (w > best) {
        best = w;
        target = c;
      }
    active[smallest] = 0;
    if (target == clusters.size()) {
      pool.push_back(smallest);
      continue;
    }
    for (auto u : clusters[smallest]) owner[u] = target;
    clusters[target].insert(clusters[target].end(), clusters[smallest].begin(), clusters[smallest].end());
    clusters[smallest].clear();
  }

  std::vector<std::vector<std::uint32_t>> result;
  for (std::size_t c = 0; c < clusters.size(); ++c)
    if (active[c]) result.push_back(std::move(clusters[c]));

  std::ranges::sort(pool, {}, [&](std::size_t c) { return *std::ranges::min_element(clusters[c]); });
  std::vector<std::vector<std::uint32_t>> batches;
  std::vector<std::uint32_t> batch;
  for (std::size_t c : pool) {
    batch.insert(batch.end(), clusters[c].begin(), clusters[c].end());
    if (batch.size() >= min_size) batches.push_back(std::exchange(batch, {}));
  }
  if (!batch.empty()) {
    if (!batches.empty()) {
      batches.back().insert(batches.back().end(), batch.begin(), batch.end());
    } else if (!result.empty()) {
      auto smallest = std::ranges::min_element(result, {}, [](const auto& c) { return c.size(); });
      smallest->insert(smallest->end(), batch.begin(), batch.end());
    } else {
      batches.push_back(std::move(batch));
    }
  }
  for (auto& b : batches) result.push_back(std::move(b));

  struct Ranked {
    std::vector<std::uint32_t> nodes;
    double intra;
  };
  std::vector<Ranked> ranked;
  for (auto& c : result) {
    std::ranges::sort(c);
    std::vector<char> in(g.node_count(), 0);
    for (auto u : c) in[u] = 1;
    double intra = 0.0;
    for (auto u : c)
      for (const auto& [v, w] : g.adj[u])
        if (in[v] && v > u) intra += w;
    ranked.push_back({std::move(c), intra});
  }
  std::ranges::sort(ranked, [](const Ranked& a, const Ranked& b) {
    if (a.intra != b.intra) return a.intra > b.intra;
    if (a.nodes.size() != b.nodes.size()) return a.nodes.size() > b.nodes.size();
    return a.nodes.front() < b.nodes.front();
  });

  ClusterSet out;
  out.min_size = min_size;
  out.max_clusters = max_clusters;
  std::vector<char> clustered(g.vehicle_count, 0);
  for (std::size_t r = 0; r < ranked.size() && r < max_clusters; ++r) {
    std::vector<VehicleId> ids;
    for (auto u : ranked[r].nodes) {
      ids.push_back(g.vehicles[u]);
      clustered[g.vehicles[u]] = 1;
    }
    out.clusters.push_back(std::move(ids));
  }
  std::ranges::sort(out.clusters, {}, [](const auto& c) { return c.front(); });
  for (VehicleId v = 0; v < g.vehicle_count; ++v)
    if (!clustered[v]) out.residual.push_back(v);
  return out;
}

ClusterSet single_cluster(std::size_t vehicle_count) {
  ClusterSet cs;
  cs.clusters.emplace_back(vehicle_count);
  std::iota(cs.clusters[0].begin(), cs.clusters[0].end(), VehicleId{0});
  return cs;
}

void write_clusters(std::ostream& out, const ClusterSet& cs, std::size_t vehicle_count) {
  std::vector<long long> label(vehicle_count, -1);
  for (std::size_t c = 0; c < cs.clusters.size(); ++c)
    for (VehicleId v : cs.clusters[c]) label.at(v) = static_cast<long long>(c);
  out << "vehicle_id,cluster_id\n";
  for (std::size_t v = 0; v < vehicle_count; ++v) fmt::print(out, "{},{}\n", v, label[v]);
}

ClusterSet read_clusters(std::istream& in) {
  const CsvTable t = read_csv(in, {"vehicle_id", "cluster_id"});
  ClusterSet cs;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto v = static_cast<VehicleId>(parse_count(t.rows[r][0], r + 2));
    if (v != r) throw ParseError("cluster rows must list vehicles in order", r + 2);
    const long long c = parse_int(t.rows[r][1], r + 2);
    if (c < -1) throw ParseError("cluster id must be >= -1", r + 2);
    if (c == -1) {
      cs.residual.push_back(v);
      continue;
    }
    if (static_cast<std::size_t>(c) >= cs.clusters.size()) cs.clusters.resize(static_cast<std::size_t>(c) + 1);
    cs.clusters[static_cast<std::size_t>(c)].push_back(v);
  }
  for (const auto& c : cs.clusters)
    if (c.empty()) throw ParseError("cluster ids must be dense", 0);
  return cs;
}

double squared_cluster_mass(const ClusterSet& cs) {
  double s = 0.0;
  for (const auto& c : cs.clusters) s += static_cast<double>(c.size()) * static_cast<double>(c.size());
  return s;
}

}  // namespace tfo
