#pragma once

namespace tfo {

/// Mean Earth radius in meters, shared by every distance computation.
inline constexpr double kEarthRadiusMeters = 6371008.8;

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// Great-circle distance in meters.
double haversine(LatLon p, LatLon q);

/// Linear interpolation in coordinate space; adequate over a single road segment.
LatLon lerp(LatLon a, LatLon b, double t);

}  // namespace tfo
