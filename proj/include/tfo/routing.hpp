#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "tfo/demand.hpp"
#include "tfo/road_network.hpp"

namespace tfo {

struct RoutingConfig {
  std::size_t k = 2;      // alternatives per vehicle
  double alpha = 10.0;    // sampling interval, seconds
  double window = 600.0;  // simulation window, seconds
};

void validate(const RoutingConfig& cfg);

/// Sampled state of a vehicle at time `t`. The travel direction is the
/// ordered node pair (`dir_from`, `dir_to`) of the current edge.
struct RoutePoint {
  double t = 0.0;
  LatLon pos;
  EdgeIndex edge = 0;
  double speed = 0.0;
  NodeIndex dir_from = 0;
  NodeIndex dir_to = 0;
};

/// One alternative of one vehicle. `alt` is 0-based.
struct Route {
  VehicleId vehicle = 0;
  std::size_t alt = 0;
  std::vector<EdgeIndex> edges;
  double duration = 0.0;  // seconds
  double length = 0.0;    // meters
  double alpha = 0.0;     // sampling interval used for `points`
  std::vector<RoutePoint> points;
};

using Path = std::vector<EdgeIndex>;

/// Travel time of a path, summed in path order.
double path_duration(const RoadNetwork& net, std::span<const EdgeIndex> path);

/// Yen's k shortest loopless paths by travel time. Ties are broken by the
/// lexicographic order of the edge-id sequence. Throws NoPathError.
std::vector<Path> k_shortest_routes(const RoadNetwork& net, NodeIndex origin, NodeIndex dest, std::size_t k);

/// Samples the path every alpha seconds up to min(duration, window), assuming
/// constant speed on each edge.
Route sample_route(const RoadNetwork& net, std::span<const EdgeIndex> edges, const RoutingConfig& cfg);

/// Routes every vehicle; the result is ordered by (vehicle, alt).
std::vector<Route> route_vehicles(const RoadNetwork& net, const std::vector<Vehicle>& vehicles,
                                  const RoutingConfig& cfg);

/// Number of real alternatives per vehicle (index = vehicle id).
std::vector<std::size_t> alternatives_per_vehicle(std::span<const Route> routes);

void write_route_points(std::ostream& out, const RoadNetwork& net, std::span<const Route> routes);
void write_route_summary(std::ostream& out, std::span<const Route> routes);
void write_route_edges(std::ostream& out, const RoadNetwork& net, std::span<const Route> routes);

/// Rebuilds routes from the three route files. Point times must be exact
/// multiples of `alpha`.
std::vector<Route> read_routes(std::istream& points, std::istream& summary, std::istream& edges,
                               const RoadNetwork& net, double alpha);

}  // namespace tfo
