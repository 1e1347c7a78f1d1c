#include "tfo/demand.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <random>

#include "tfo/error.hpp"
#include "tfo/text.hpp"

namespace tfo {

std::vector<Vehicle> generate_vehicles(const RoadNetwork& net, const DemandConfig& cfg) {
  if (cfg.n < 1) throw ValidationError("vehicle count must be >= 1");
  if (!(cfg.l_min > 0.0 && cfg.l_min < cfg.l_max)) throw ValidationError("need 0 < l_min < l_max");
  if (net.node_count() < 2) throw ValidationError("network needs at least 2 nodes");
  if (cfg.attraction && !(cfg.attraction_radius_m > 0.0))
    throw ValidationError("attraction radius must be positive");

  std::vector<NodeIndex> destinations;
  for (NodeIndex i = 0; i < net.node_count(); ++i)
    if (!cfg.attraction || haversine(net.node(i).pos, *cfg.attraction) <= cfg.attraction_radius_m)
      destinations.push_back(i);
  if (destinations.empty()) throw InfeasibleDemandError("no network node lies within the attraction radius");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_origin(0, net.node_count() - 1);
  std::uniform_int_distribution<std::size_t> pick_dest(0, destinations.size() - 1);

  std::vector<Vehicle> out;
  out.reserve(cfg.n);
  const std::size_t budget = kDemandAttemptsPerVehicle * cfg.n;
  for (std::size_t attempt = 0; attempt < budget && out.size() < cfg.n; ++attempt) {
    const auto o = static_cast<NodeIndex>(pick_origin(rng));
    const NodeIndex d = destinations[pick_dest(rng)];
    if (o == d) continue;
    const double dist = haversine(net.node(o).pos, net.node(d).pos);
    if (dist < cfg.l_min || dist > cfg.l_max) continue;
    out.push_back({static_cast<VehicleId>(out.size()), o, d});
  }
  if (out.size() < cfg.n)
    throw InfeasibleDemandError(fmt::format(
        "only {} of {} vehicles satisfied the length constraint within {} attempts", out.size(), cfg.n, budget));
  return out;
}

void write_vehicles(std::ostream& out, const RoadNetwork& net, const std::vector<Vehicle>& vehicles) {
  out << "vehicle_id,origin_node,dest_node\n";
  for (const Vehicle& v : vehicles)
    fmt::print(out, "{},{},{}\n", v.id, net.node(v.origin).id, net.node(v.destination).id);
}

std::vector<Vehicle> read_vehicles(std::istream& in, const RoadNetwork& net) {
  const CsvTable t = read_csv(in, {"vehicle_id", "origin_node", "dest_node"});
  std::vector<Vehicle> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto id = parse_count(row[0], r + 2);
    if (id != out.size()) throw ParseError("vehicle ids must be dense and ordered", r + 2);
    auto o = net.find_node(row[1]);
    auto d = net.find_node(row[2]);
    if (!o || !d) throw ParseError("vehicle references unknown node", r + 2);
    if (*o == *d) throw ParseError("vehicle origin equals destination", r + 2);
    out.push_back({static_cast<VehicleId>(id), *o, *d});
  }
  return out;
}

}  // namespace tfo
