#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "tfo/road_network.hpp"

namespace fixture {

/// Straight chain of `n` nodes heading east, two-way roads of `spacing_m`.
inline tfo::RoadNetwork line(std::size_t n, double spacing_m, double speed, bool two_way = true) {
  tfo::GridSpec s;
  s.rows = 2;
  s.cols = n;
  s.spacing_m = spacing_m;
  s.speed_mps = speed;
  s.origin = {48.72, 21.26};
  const tfo::RoadNetwork grid = tfo::generate_grid(s);
  // Keep only the bottom row.
  std::vector<tfo::Node> nodes(grid.nodes().begin(), grid.nodes().begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<tfo::Edge> edges;
  for (const auto& e : grid.edges()) {
    if (e.from >= n || e.to >= n) continue;
    if (!two_way && e.to < e.from) continue;
    tfo::Edge c = e;
    c.id = "e" + std::to_string(edges.size());
    c.oneway = !two_way;
    edges.push_back(c);
  }
  return tfo::RoadNetwork(std::move(nodes), std::move(edges));
}

inline tfo::RoadNetwork grid(std::size_t rows, std::size_t cols, double spacing = 100.0, double speed = 10.0) {
  tfo::GridSpec s;
  s.rows = rows;
  s.cols = cols;
  s.spacing_m = spacing;
  s.speed_mps = speed;
  s.origin = {48.72, 21.26};
  return tfo::generate_grid(s);
}

inline tfo::RoadNetwork parse(const std::string& text) {
  std::istringstream in(text);
  return tfo::read_network(in);
}

}  // namespace fixture
