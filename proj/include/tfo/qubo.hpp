#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "tfo/congestion.hpp"

namespace tfo {

using VarIndex = std::uint32_t;

/// Bit vector over the QUBO variables.
using Assignment = std::vector<std::uint8_t>;

/// Upper-triangular QUBO over the blocks of a vehicle subset. Block b holds
/// vehicle `vehicles[b]`; its alternative a is variable b * k + a. Alternatives
/// at or beyond `real_alts[b]` are placeholders for routes that do not exist.
struct QuboInstance {
  std::size_t k = 1;
  std::vector<VehicleId> vehicles;
  std::vector<std::size_t> real_alts;
  std::vector<std::size_t> shortest_alt;
  double lambda = 0.0;
  double offset = 0.0;  // lambda * number of vehicles
  std::map<std::pair<VarIndex, VarIndex>, double> coeffs;  // first <= second

  std::size_t n_var() const { return vehicles.size() * k; }
  std::size_t block_count() const { return vehicles.size(); }
  VarIndex index(std::size_t block, std::size_t alt) const { return static_cast<VarIndex>(block * k + alt); }
  bool is_real(VarIndex v) const { return v % k < real_alts[v / k]; }
  std::vector<VarIndex> not_real() const;
  double coeff(VarIndex u, VarIndex v) const;
};

/// Row sums of the symmetrized tensor, max'ed with the floor 1 + max penalty.
double compute_lambda(const CongestionWeights& weights);
double compute_lambda(const CongestionWeights& weights, std::span<const VehicleId> subset);

/// Per-(vehicle, alternative) interaction totals over a subset; [block][alt].
std::vector<std::vector<double>> interaction_row_sums(const CongestionWeights& weights,
                                                      std::span<const VehicleId> subset);

/// Builds the full-instance QUBO over all vehicles.
QuboInstance build_qubo(const CongestionWeights& weights, std::size_t k);

/// Builds the QUBO restricted to `subset` (interactions with vehicles outside
/// the subset are dropped). The subset is sorted internally.
QuboInstance build_qubo(const CongestionWeights& weights, std::span<const VehicleId> subset, std::size_t k);

/// x^T Q x + offset. Throws ValidationError on length mismatch.
double energy(const QuboInstance& q, const Assignment& x);

/// True iff every block selects exactly one real alternative.
bool is_valid(const QuboInstance& q, const Assignment& x);

/// One-hot assignment from per-block alternatives.
Assignment encode(const QuboInstance& q, std::span<const std::size_t> alts);

/// Alternative chosen by each block of a valid assignment.
std::vector<std::size_t> decode(const QuboInstance& q, const Assignment& x);

/// Count of nonzero strictly-upper coefficients over C(n_var, 2); 0 if n_var < 2.
double qubo_density(const QuboInstance& q);

void write_qubo(std::ostream& out, const QuboInstance& q);
QuboInstance read_qubo(std::istream& in);

/// Linearized MILP in CPLEX LP format: binaries x_u, one auxiliary binary
/// y_u_v per quadratic term with y <= x_u, y <= x_v, y >= x_u + x_v - 1.
/// The constant offset is reported in a comment.
void write_milp_lp(std::ostream& out, const QuboInstance& q);

}  // namespace tfo
