#include "tfo/solvers.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "tfo/error.hpp"
#include "tfo/text.hpp"

namespace tfo {

namespace {

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

/// Symmetric adjacency view of an upper-triangular QUBO for O(degree) flips.
class FlipModel {
 public:
  explicit FlipModel(const QuboInstance& q) : n_(q.n_var()), offset_(q.offset), h_(n_, 0.0), start_(n_ + 1, 0) {
    for (const auto& [uv, c] : q.coeffs) {
      if (uv.first == uv.second) {
        h_[uv.first] += c;
      } else {
        ++start_[uv.first + 1];
        ++start_[uv.second + 1];
      }
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    nbr_.resize(start_.back());
    weight_.resize(start_.back());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (const auto& [uv, c] : q.coeffs) {
      if (uv.first == uv.second) continue;
      nbr_[fill[uv.first]] = uv.second;
      weight_[fill[uv.first]++] = c;
      nbr_[fill[uv.second]] = uv.first;
      weight_[fill[uv.second]++] = c;
    }
  }

  std::size_t size() const { return n_; }
  double h(VarIndex u) const { return h_[u]; }

  template <typename F>
  void for_neighbors(VarIndex u, F&& f) const {
    for (std::size_t e = start_[u]; e < start_[u + 1]; ++e) f(nbr_[e], weight_[e]);
  }

  /// Local fields sum_v J_uv x_v.
  std::vector<double> fields(const Assignment& x) const {
    std::vector<double> f(n_, 0.0);
    for (VarIndex u = 0; u < n_; ++u)
      if (x[u]) for_neighbors(u, [&](VarIndex v, double w) { f[v] += w; });
    return f;
  }

  double energy(const Assignment& x, const std::vector<double>& f) const {
    double e = offset_;
    for (VarIndex u = 0; u < n_; ++u)
      if (x[u]) e += h_[u] + 0.5 * f[u];
    return e;
  }

  double delta(const Assignment& x, const std::vector<double>& f, VarIndex u) const {
    return (x[u] ? -1.0 : 1.0) * (h_[u] + f[u]);
  }

  void flip(Assignment& x, std::vector<double>& f, VarIndex u) const {
    const double sign = x[u] ? -1.0 : 1.0;
    x[u] ^= 1;
    for_neighbors(u, [&](VarIndex v, double w) { f[v] += sign * w; });
  }

 private:
  std::size_t n_;
  double offset_;
  std::vector<double> h_;
  std::vector<std::size_t> start_;
  std::vector<VarIndex> nbr_;
  std::vector<double> weight_;
};

SolveResult finish(const QuboInstance& q, Assignment x, std::string name, std::uint64_t seed, double prep,
                   double solve) {
  SolveResult r;
  r.energy = energy(q, x);
  r.valid = is_valid(q, x);
  r.x = std::move(x);
  r.solver = std::move(name);
  r.seed = seed;
  r.prep_s = prep;
  r.solve_s = solve;
  return r;
}


SolveResult exhaustive_full(const QuboInstance& q, const FlipModel& m, double prep, Clock::time_point t0) {
  const std::size_t n = q.n_var();
  Assignment x(n, 0);
  std::vector<double> f(n, 0.0);
  double e = q.offset;
  double best_e = e;
  std::uint64_t state = 0, best_state = 0;
  // x[u] = bit u of the mask; lex order compares the lowest differing bit.
  auto mask_lex_less = [](std::uint64_t a, std::uint64_t b) {
    const std::uint64_t diff = a ^ b;
    return diff && !(a & (diff & (~diff + 1)));
  };
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t i = 1; i < total; ++i) {
    const auto u = static_cast<VarIndex>(std::countr_zero(i));
    e += m.delta(x, f, u);
    m.flip(x, f, u);
    state ^= std::uint64_t{1} << u;
    if (e < best_e && !near(e, best_e)) {
      best_e = e;
      best_state = state;
    } else if (near(e, best_e) && mask_lex_less(state, best_state)) {
      best_e = std::min(best_e, e);
      best_state = state;
    }
  }
  Assignment best(n, 0);
  for (std::size_t u = 0; u < n; ++u) best[u] = (best_state >> u) & 1u;
  return finish(q, std::move(best), "exhaustive", 0, prep, seconds_since(t0));
}

SolveResult exhaustive_feasible(const QuboInstance& q, const FlipModel& m, double prep, Clock::time_point t0) {
  const std::size_t nb = q.block_count();
  const std::size_t k = q.k;
  // Components of the block interaction graph.
  std::vector<std::size_t> parent(nb);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& [uv, c] : q.coeffs) {
    const std::size_t a = uv.first / k, b = uv.second / k;
    if (a != b && c != 0.0) parent[find(a)] = find(b);
  }
  std::vector<std::vector<std::size_t>> comps(nb);
  for (std::size_t b = 0; b < nb; ++b) comps[find(b)].push_back(b);

  std::vector<std::size_t> choice(nb, 0);
  std::vector<std::int64_t> position(nb, -1);
  for (const auto& comp : comps) {
    if (comp.empty()) continue;
    double states = 1.0;
    for (std::size_t b : comp) states *= static_cast<double>(q.real_alts[b]);
    if (states > kMaxFeasibleStates)
      throw InstanceTooLargeError(
          fmt::format("feasible scan of a {}-vehicle component needs {:.3g} states (limit {:.0g})", comp.size(),
                      states, kMaxFeasibleStates));
    for (std::size_t p = 0; p < comp.size(); ++p) position[comp[p]] = static_cast<std::int64_t>(p);

    std::vector<std::size_t> cur(comp.size(), 0), best(comp.size(), 0);
    std::vector<double> partial(comp.size() + 1, 0.0);
    double best_e = std::numeric_limits<double>::infinity();
    // Depth-first over blocks; higher alternatives first so that the first of
    // several equal minima is the lexicographically smallest bit vector.
    auto recurse = [&](auto&& self, std::size_t depth) -> void {
      if (depth == comp.size()) {
        const double e = partial[depth];
        if (std::isinf(best_e) || (e < best_e && !near(e, best_e))) {
          best_e = e;
          best = cur;
        }
        return;
      }
      const std::size_t b = comp[depth];
      for (std::size_t a = q.real_alts[b]; a-- > 0;) {
        const VarIndex u = q.index(b, a);
        double add = m.h(u);
        m.for_neighbors(u, [&](VarIndex v, double w) {
          const std::size_t vb = v / k;
          if (vb == b) return;
          const auto pos = position[vb];
          if (pos >= 0 && static_cast<std::size_t>(pos) < depth && cur[static_cast<std::size_t>(pos)] == v % k)
            add += w;
        });
        cur[depth] = a;
        partial[depth + 1] = partial[depth] + add;
        self(self, depth + 1);
      }
    };
    recurse(recurse, 0);
    for (std::size_t p = 0; p < comp.size(); ++p) {
      choice[comp[p]] = best[p];
      position[comp[p]] = -1;
    }
  }
  return finish(q, encode(q, choice), "exhaustive", 0, prep, seconds_since(t0));
}

bool out_of_time(const SolverConfig& cfg, Clock::time_point t0) {
  return cfg.time_limit_s && seconds_since(t0) >= *cfg.time_limit_s;
}

Assignment random_feasible(const QuboInstance& q, std::mt19937_64& rng) {
  std::vector<std::size_t> alts(q.block_count());
  for (std::size_t b = 0; b < alts.size(); ++b)
    alts[b] = std::uniform_int_distribution<std::size_t>(0, q.real_alts[b] - 1)(rng);
  return encode(q, alts);
}

}  // namespace

void validate(const SolverConfig& cfg) {
  if (cfg.sa_reads < 1) throw ValidationError("sa reads must be >= 1");
  if (cfg.sa_sweeps && *cfg.sa_sweeps < 1) throw ValidationError("sa sweeps must be >= 1");
  if (cfg.sa_t_initial && !(*cfg.sa_t_initial > 0.0)) throw ValidationError("sa initial temperature must be > 0");
  if (cfg.sa_t_final && !(*cfg.sa_t_final > 0.0)) throw ValidationError("sa final temperature must be > 0");
  if (cfg.sa_cooling && !(*cfg.sa_cooling > 0.0 && *cfg.sa_cooling < 1.0))
    throw ValidationError("sa cooling factor must be in (0, 1)");
  if (cfg.tabu_stagnation && *cfg.tabu_stagnation < 1) throw ValidationError("tabu stagnation must be >= 1");
  if (cfg.tabu_iterations && *cfg.tabu_iterations < 1) throw ValidationError("tabu iterations must be >= 1");
  if (cfg.time_limit_s && !(*cfg.time_limit_s > 0.0)) throw ValidationError("time limit must be > 0");
}

Assignment shortest_assignment(const QuboInstance& q) { return encode(q, q.shortest_alt); }

Assignment repair(const QuboInstance& q, const Assignment& x) {
  if (x.size() != q.n_var()) throw ValidationError("assignment length mismatch");
  Assignment out = x;
  for (std::size_t b = 0; b < q.block_count(); ++b) {
    std::size_t selected = 0;
    bool real = true;
    for (std::size_t a = 0; a < q.k; ++a) {
      if (!x[q.index(b, a)]) continue;
      ++selected;
      real = a < q.real_alts[b];
    }
    if (selected == 1 && real) continue;
    for (std::size_t a = 0; a < q.k; ++a) out[q.index(b, a)] = a == q.shortest_alt[b];
  }
  return out;
}

SolveResult solve_exhaustive(const QuboInstance& q, ExhaustiveMode mode) {
  const auto t0 = Clock::now();
  if (mode == ExhaustiveMode::kAuto)
    mode = q.n_var() <= kMaxFullScanVars ? ExhaustiveMode::kFull : ExhaustiveMode::kFeasible;
  if (mode == ExhaustiveMode::kFull && q.n_var() > kMaxFullScanVars)
    throw InstanceTooLargeError(fmt::format("full scan limited to {} variables, got {}", kMaxFullScanVars, q.n_var()));
  FlipModel model(q);
  const double prep = seconds_since(t0);
  const auto t1 = Clock::now();
  return mode == ExhaustiveMode::kFull ? exhaustive_full(q, model, prep, t1)
                                       : exhaustive_feasible(q, model, prep, t1);
}

SolveResult solve_sa(const QuboInstance& q, const SolverConfig& cfg) {
  validate(cfg);
  const auto t_prep = Clock::now();
  FlipModel model(q);
  const Assignment warm = shortest_assignment(q);
  const std::size_t n = q.n_var();
  const std::size_t sweeps = cfg.sa_sweeps.value_or(50 * n);

  std::mt19937_64 rng0 = seeded_rng(cfg.seed, 0);
  double t_init = 1.0;
  if (cfg.sa_t_initial) {
    t_init = *cfg.sa_t_initial;
  } else {
    Assignment probe(n);
    std::bernoulli_distribution coin(0.5);
    for (auto& b : probe) b = coin(rng0);
    const auto f = model.fields(probe);
    double max_delta = 0.0;
    for (VarIndex u = 0; u < n; ++u) max_delta = std::max(max_delta, std::abs(model.delta(probe, f, u)));
    if (max_delta > 0.0) t_init = max_delta;
  }
  double cooling = 1.0;
  if (sweeps > 1) {
    if (cfg.sa_cooling) {
      cooling = *cfg.sa_cooling;
    } else {
      const double t_final = cfg.sa_t_final.value_or(1e-3 * t_init);
      cooling = std::pow(t_final / t_init, 1.0 / static_cast<double>(sweeps - 1));
    }
  }
  const double prep = seconds_since(t_prep);

  const auto t0 = Clock::now();
  Assignment best = warm;
  double best_e = std::numeric_limits<double>::infinity();
  for (std::size_t read = 0; read < cfg.sa_reads; ++read) {
    std::mt19937_64 rng = seeded_rng(cfg.seed, read + 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Assignment x = warm;
    auto f = model.fields(x);
    double e = model.energy(x, f);
    Assignment read_best = x;
    double read_best_e = e;
    double temp = t_init;
    for (std::size_t s = 0; s < sweeps; ++s, temp *= cooling) {
      for (VarIndex u = 0; u < n; ++u) {
        const double d = model.delta(x, f, u);
        if (d > 0.0 && u01(rng) >= std::exp(-d / temp)) continue;
        model.flip(x, f, u);
        e += d;
        if (e < read_best_e - 1e-12 * std::max(1.0, std::abs(read_best_e))) {
          read_best_e = e;
          read_best = x;
        }
      }
      if (out_of_time(cfg, t0)) break;
    }
    const double exact = energy(q, read_best);
    if (exact < best_e) {
      best_e = exact;
      best = std::move(read_best);
    }
    if (out_of_time(cfg, t0)) break;
  }
  return finish(q, std::move(best), "sa", cfg.seed, prep, seconds_since(t0));
}

SolveResult solve_tabu(const QuboInstance& q, const SolverConfig& cfg) {
  validate(cfg);
  const auto t_prep = Clock::now();
  FlipModel model(q);
  const std::size_t n = q.n_var();
  const std::size_t tenure = std::min(cfg.tabu_tenure.value_or(std::max<std::size_t>(8, n / 10)), n - 1);
  const std::size_t stagnation_limit = cfg.tabu_stagnation.value_or(2 * n);
  const std::size_t iterations = cfg.tabu_iterations.value_or(std::max<std::size_t>(1000, 100 * n));
  const double prep = seconds_since(t_prep);

  const auto t0 = Clock::now();
  std::mt19937_64 rng = seeded_rng(cfg.seed, 0x7ab);
  Assignment x = shortest_assignment(q);
  auto f = model.fields(x);
  double e = model.energy(x, f);
  Assignment best = x;
  double best_e = e;
  std::vector<std::size_t> tabu_until(n, 0);
  std::size_t stagnation = 0;
  std::size_t restarts = 0;

  for (std::size_t it = 0; it < iterations; ++it) {
    std::size_t pick = n;
    double pick_d = std::numeric_limits<double>::infinity();
    for (VarIndex u = 0; u < n; ++u) {
      const double d = model.delta(x, f, u);
      const bool aspiration = e + d < best_e && !near(e + d, best_e);
      if (tabu_until[u] > it && !aspiration) continue;
      if (d < pick_d) {
        pick_d = d;
        pick = u;
      }
    }
    if (pick < n) {
      model.flip(x, f, static_cast<VarIndex>(pick));
      e += pick_d;
      tabu_until[pick] = it + 1 + tenure;
    }
    if (e < best_e && !near(e, best_e)) {
      best_e = e;
      best = x;
      stagnation = 0;
    } else if (++stagnation >= stagnation_limit && it + 1 < iterations) {
      x = random_feasible(q, rng);
      f = model.fields(x);
      e = model.energy(x, f);
      std::fill(tabu_until.begin(), tabu_until.end(), 0);
      stagnation = 0;
      ++restarts;
    }
    if ((it & 255u) == 0 && out_of_time(cfg, t0)) break;
  }
  auto r = finish(q, std::move(best), "tabu", cfg.seed, prep, seconds_since(t0));
  r.restarts = restarts;
  return r;
}

void write_results(std::ostream& out, std::span<const ResultRow> rows) {
  out << "solver,seed,energy,valid,repaired,prep_s,solve_s\n";
  for (const auto& r : rows)
    fmt::print(out, "{},{},{},{},{},{},{}\n", r.solver, r.seed, r.energy, int{r.valid}, int{r.repaired}, r.prep_s,
               r.solve_s);
}

std::vector<ResultRow> read_results(std::istream& in) {
  const CsvTable t = read_csv(in, {"solver", "seed", "energy", "valid", "repaired", "prep_s", "solve_s"});
  std::vector<ResultRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& c = t.rows[r];
    const std::size_t line = r + 2;
    auto flag = [&](const std::string& s) {
      if (s != "0" && s != "1") throw ParseError("flag must be 0 or 1", line);
      return s == "1";
    };
    rows.push_back({c[0], static_cast<std::uint64_t>(parse_count(c[1], line)), parse_double(c[2], line), flag(c[3]),
                    flag(c[4]), parse_double(c[5], line), parse_double(c[6], line)});
  }
  return rows;
}

}  // namespace tfo
