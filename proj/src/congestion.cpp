#include "tfo/congestion.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_map>

#include "tfo/error.hpp"
#include "tfo/text.hpp"

namespace tfo {

double pair_score(double distance_m, double v_leader, double v_follower, double alpha, double gamma) {
  const double vbar = 0.5 * (v_leader + v_follower);
  if (vbar <= 0.0) return distance_m == 0.0 ? alpha : 0.0;
  return alpha * std::max(1.0 - distance_m / (gamma * vbar), 0.0);
}

namespace {

struct EntryKey {
  EdgeIndex edge;
  VehicleId leader;
  VehicleId follower;
  std::uint32_t alt_leader;
  std::uint32_t alt_follower;

  friend bool operator==(const EntryKey&, const EntryKey&) = default;
  auto tie() const { return std::tie(edge, leader, follower, alt_leader, alt_follower); }
};

struct EntryKeyHash {
  std::size_t operator()(const EntryKey& k) const noexcept {
    std::size_t h = k.edge;
    for (std::size_t v : {std::size_t{k.leader}, std::size_t{k.follower}, std::size_t{k.alt_leader},
                          std::size_t{k.alt_follower}})
      h = h * 1000003u ^ v;
    return h;
  }
};

struct Occupant {
  EdgeIndex edge;
  double arc;
  const Route* route;
  const RoutePoint* point;
};

}  // namespace

std::vector<CongestionEntry> detect_conflicts(const RoadNetwork& net, std::span<const Route> routes, double alpha,
                                              double window, double gamma) {
  if (!(alpha > 0.0) || !(gamma > 0.0)) throw ValidationError("alpha and gamma must be positive");
  for (const Route& r : routes)
    if (r.alpha != alpha)
      throw ValidationError(fmt::format("route of vehicle {} alt {} sampled with alpha {} != {}", r.vehicle, r.alt,
                                        r.alpha, alpha));

  const auto steps = static_cast<std::size_t>(std::floor(window / alpha + 1e-9)) + 1;
  std::unordered_map<EntryKey, double, EntryKeyHash> acc;
  std::vector<Occupant> occ;
  for (std::size_t s = 0; s < steps; ++s) {
    occ.clear();
    for (const Route& r : routes) {
      if (s >= r.points.size()) continue;
      const RoutePoint& p = r.points[s];
      occ.push_back({p.edge, net.arc_position(p.edge, p.pos), &r, &p});
    }
    std::ranges::sort(occ, [](const Occupant& a, const Occupant& b) {
      return std::tie(a.edge, a.route->vehicle, a.route->alt) < std::tie(b.edge, b.route->vehicle, b.route->alt);
    });
    for (std::size_t lo = 0; lo < occ.size();) {
      std::size_t hi = lo + 1;
      while (hi < occ.size() && occ[hi].edge == occ[lo].edge) ++hi;
      for (std::size_t x = lo; x < hi; ++x) {
        for (std::size_t y = x + 1; y < hi; ++y) {
          const Occupant* lead = &occ[x];
          const Occupant* follow = &occ[y];
          if (lead->route->vehicle == follow->route->vehicle) continue;
          // Sorted by vehicle id, so on equal arc the lower id already leads.
          if (follow->arc > lead->arc) std::swap(lead, follow);
          const double d = haversine(lead->point->pos, follow->point->pos);
          const double sc = pair_score(d, lead->point->speed, follow->point->speed, alpha, gamma);
          if (sc <= 0.0) continue;
          acc[EntryKey{occ[lo].edge, lead->route->vehicle, follow->route->vehicle,
                       static_cast<std::uint32_t>(lead->route->alt),
                       static_cast<std::uint32_t>(follow->route->alt)}] += sc;
        }
      }
      lo = hi;
    }
  }

  std::vector<std::pair<EntryKey, double>> sorted(acc.begin(), acc.end());
  std::ranges::sort(sorted, [](const auto& a, const auto& b) { return a.first.tie() < b.first.tie(); });
  std::vector<CongestionEntry> out;
  out.reserve(sorted.size());
  for (const auto& [k, v] : sorted)
    out.push_back({k.edge, k.leader, k.follower, k.alt_leader, k.alt_follower, v});
  return out;
}

double CongestionWeights::weight(VehicleId i, VehicleId j, std::uint32_t a, std::uint32_t b) const {
  if (i == j) return 0.0;
  const WeightKey key = i < j ? WeightKey{i, j, a, b} : WeightKey{j, i, b, a};
  auto it = w.find(key);
  return it == w.end() ? 0.0 : it->second;
}

void CongestionWeights::add(VehicleId i, VehicleId j, std::uint32_t a, std::uint32_t b, double value) {
  if (i == j) throw ValidationError("self-interaction weight");
  const WeightKey key = i < j ? WeightKey{i, j, a, b} : WeightKey{j, i, b, a};
  w[key] += value;
}

std::vector<std::vector<double>> duration_penalties(std::span<const Route> routes) {
  const auto counts = alternatives_per_vehicle(routes);
  std::vector<std::vector<double>> durations(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) durations[i].assign(counts[i], 0.0);
  std::vector<std::vector<bool>> seen(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) seen[i].assign(counts[i], false);
  for (const Route& r : routes) {
    durations[r.vehicle][r.alt] = r.duration;
    seen[r.vehicle][r.alt] = true;
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0 || std::ranges::find(seen[i], false) != seen[i].end())
      throw ValidationError(fmt::format("vehicle {} has missing route alternatives", i));
    const double best = *std::ranges::min_element(durations[i]);
    for (double& d : durations[i]) d -= best;
  }
  return durations;
}

CongestionWeights build_weights(std::span<const CongestionEntry> entries, std::span<const Route> routes) {
  CongestionWeights out;
  out.penalties = duration_penalties(routes);
  for (const CongestionEntry& e : entries)
    out.add(e.leader, e.follower, static_cast<std::uint32_t>(e.alt_leader), static_cast<std::uint32_t>(e.alt_follower),
            e.score);
  return out;
}

void write_weights(std::ostream& out, const CongestionWeights& w) {
  out << "i,j,a_i,a_j,weight\n";
  for (const auto& [k, v] : w.w) fmt::print(out, "{},{},{},{},{}\n", k.i, k.j, k.a, k.b, v);
}

void write_penalties(std::ostream& out, const CongestionWeights& w) {
  out << "vehicle_id,alt,pi_seconds\n";
  for (std::size_t i = 0; i < w.penalties.size(); ++i)
    for (std::size_t a = 0; a < w.penalties[i].size(); ++a) fmt::print(out, "{},{},{}\n", i, a, w.penalties[i][a]);
}

CongestionWeights read_weights(std::istream& weights, std::istream& penalties) {
  CongestionWeights out;
  const CsvTable p = read_csv(penalties, {"vehicle_id", "alt", "pi_seconds"});
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const std::size_t line = r + 2;
    const auto i = parse_count(p.rows[r][0], line);
    const auto a = parse_count(p.rows[r][1], line);
    if (i >= out.penalties.size()) out.penalties.resize(i + 1);
    if (a != out.penalties[i].size()) throw ParseError("penalty alternatives must be dense and ordered", line);
    const double pi = parse_double(p.rows[r][2], line);
    if (pi < 0.0) throw ParseError("negative duration penalty", line);
    out.penalties[i].push_back(pi);
  }
  for (std::size_t i = 0; i < out.penalties.size(); ++i)
    if (out.penalties[i].empty()) throw ParseError(fmt::format("vehicle {} has no penalties", i), 0);

  const CsvTable t = read_csv(weights, {"i", "j", "a_i", "a_j", "weight"});
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = r + 2;
    const auto& row = t.rows[r];
    WeightKey k{static_cast<VehicleId>(parse_count(row[0], line)), static_cast<VehicleId>(parse_count(row[1], line)),
                static_cast<std::uint32_t>(parse_count(row[2], line)),
                static_cast<std::uint32_t>(parse_count(row[3], line))};
    if (k.i >= k.j) throw ParseError("weight rows need i < j", line);
    if (k.j >= out.penalties.size() || k.a >= out.penalties[k.i].size() || k.b >= out.penalties[k.j].size())
      throw ParseError("weight references an unknown vehicle alternative", line);
    const double v = parse_double(row[4], line);
    if (v < 0.0) throw ParseError("negative congestion weight", line);
    out.w[k] += v;
  }
  return out;
}

}  // namespace tfo
