#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tfo/qubo.hpp"

namespace tfo {

struct SolverConfig {
  std::uint64_t seed = 0;
  std::optional<double> time_limit_s;

  // Simulated annealing. Unset values use n_var-scaled defaults.
  std::size_t sa_reads = 8;
  std::optional<std::size_t> sa_sweeps;       // default 50 * n_var
  std::optional<double> sa_t_initial;         // default: max |dE| of single flips from a random state
  std::optional<double> sa_t_final;           // default 1e-3 * initial
  std::optional<double> sa_cooling;           // geometric factor; overrides sa_t_final when set

  // Tabu search.
  std::optional<std::size_t> tabu_tenure;      // default max(8, n_var / 10)
  std::optional<std::size_t> tabu_stagnation;  // default 2 * n_var
  std::optional<std::size_t> tabu_iterations;  // default max(1000, 100 * n_var)
};

void validate(const SolverConfig& cfg);

struct SolveResult {
  Assignment x;
  double energy = 0.0;  // includes the constant offset
  bool valid = false;
  double prep_s = 0.0;
  double solve_s = 0.0;
  std::string solver;
  std::uint64_t seed = 0;
  std::size_t restarts = 0;  // tabu only
};

enum class ExhaustiveMode {
  kAuto,      // full scan when n_var <= 24, otherwise feasible-only
  kFull,      // all 2^n_var bit vectors
  kFeasible,  // one-hot assignments over real routes
};

inline constexpr std::size_t kMaxFullScanVars = 24;
inline constexpr double kMaxFeasibleStates = 1e6;

/// Global minimum; ties go to the lexicographically smallest bit vector.
/// Feasible mode enumerates each connected component of the vehicle
/// interaction graph separately, so the state limit applies per component.
/// Throws InstanceTooLargeError.
SolveResult solve_exhaustive(const QuboInstance& q, ExhaustiveMode mode = ExhaustiveMode::kAuto);

/// Simulated annealing with single-bit Metropolis sweeps and geometric cooling,
/// warm-started from the shortest-route assignment. Best state over all reads.
SolveResult solve_sa(const QuboInstance& q, const SolverConfig& cfg);

/// Tabu search: steepest single-flip moves, per-variable tenure, aspiration on
/// a new global best, random feasible restart after stagnation.
SolveResult solve_tabu(const QuboInstance& q, const SolverConfig& cfg);

/// Shortest-route one-hot assignment.
Assignment shortest_assignment(const QuboInstance& q);

/// Resets every block that is not a single real selection to its shortest route.
Assignment repair(const QuboInstance& q, const Assignment& x);

/// One line of a results file.
struct ResultRow {
  std::string solver;
  std::uint64_t seed = 0;
  double energy = 0.0;
  bool valid = false;
  bool repaired = false;
  double prep_s = 0.0;
  double solve_s = 0.0;
};

void write_results(std::ostream& out, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results(std::istream& in);

}  // namespace tfo
