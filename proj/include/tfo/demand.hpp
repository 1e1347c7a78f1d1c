#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tfo/road_network.hpp"

namespace tfo {

using VehicleId = std::uint32_t;

struct Vehicle {
  VehicleId id = 0;
  NodeIndex origin = 0;
  NodeIndex destination = 0;

  friend bool operator==(const Vehicle&, const Vehicle&) = default;
};

struct DemandConfig {
  std::size_t n = 1;
  double l_min = 600.0;   // meters, air-line
  double l_max = 8000.0;  // meters, air-line
  std::optional<LatLon> attraction;
  double attraction_radius_m = 500.0;
  std::uint64_t seed = 0;
};

/// Rejection sampling budget per requested vehicle.
inline constexpr std::size_t kDemandAttemptsPerVehicle = 1000;

/// Samples `cfg.n` origin-destination pairs whose haversine distance lies in
/// [l_min, l_max]. With an attraction point, destinations are drawn only from
/// nodes within `attraction_radius_m` of it. Throws InfeasibleDemandError when
/// the attempt budget runs out.
std::vector<Vehicle> generate_vehicles(const RoadNetwork& net, const DemandConfig& cfg);

void write_vehicles(std::ostream& out, const RoadNetwork& net, const std::vector<Vehicle>& vehicles);
std::vector<Vehicle> read_vehicles(std::istream& in, const RoadNetwork& net);

}  // namespace tfo
