#include "tfo/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tfo {

namespace {
constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
}  // namespace

double haversine(LatLon p, LatLon q) {
  const double phi1 = deg2rad(p.lat);
  const double phi2 = deg2rad(q.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = deg2rad(q.lon - p.lon);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

LatLon lerp(LatLon a, LatLon b, double t) {
  return {a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t};
}

}  // namespace tfo
