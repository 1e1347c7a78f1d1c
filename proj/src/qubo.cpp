#include "tfo/qubo.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <istream>

#include "tfo/error.hpp"
#include "tfo/text.hpp"

namespace tfo {

namespace {

std::vector<VehicleId> sorted_subset(std::span<const VehicleId> subset, std::size_t n) {
  std::vector<VehicleId> s(subset.begin(), subset.end());
  std::ranges::sort(s);
  if (std::ranges::adjacent_find(s) != s.end()) throw ValidationError("duplicate vehicle in QUBO subset");
  if (!s.empty() && s.back() >= n) throw ValidationError("QUBO subset references an unknown vehicle");
  return s;
}

std::vector<std::int64_t> block_lookup(std::span<const VehicleId> subset, std::size_t n) {
  std::vector<std::int64_t> block(n, -1);
  for (std::size_t b = 0; b < subset.size(); ++b) block[subset[b]] = static_cast<std::int64_t>(b);
  return block;
}

std::vector<VehicleId> all_vehicles(const CongestionWeights& w) {
  std::vector<VehicleId> v(w.vehicle_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<VehicleId>(i);
  return v;
}

}  // namespace

std::vector<VarIndex> QuboInstance::not_real() const {
  std::vector<VarIndex> out;
  for (VarIndex v = 0; v < n_var(); ++v)
    if (!is_real(v)) out.push_back(v);
  return out;
}

double QuboInstance::coeff(VarIndex u, VarIndex v) const {
  if (u > v) std::swap(u, v);
  auto it = coeffs.find({u, v});
  return it == coeffs.end() ? 0.0 : it->second;
}

std::vector<std::vector<double>> interaction_row_sums(const CongestionWeights& weights,
                                                      std::span<const VehicleId> subset) {
  const auto block = block_lookup(subset, weights.vehicle_count());
  std::vector<std::vector<double>> rows(subset.size());
  for (std::size_t b = 0; b < subset.size(); ++b) rows[b].assign(weights.alternatives(subset[b]), 0.0);
  for (const auto& [key, value] : weights.w) {
    const auto bi = block[key.i];
    const auto bj = block[key.j];
    if (bi < 0 || bj < 0) continue;
    rows[static_cast<std::size_t>(bi)][key.a] += value;
    rows[static_cast<std::size_t>(bj)][key.b] += value;
  }
  return rows;
}

double compute_lambda(const CongestionWeights& weights, std::span<const VehicleId> subset) {
  const auto s = sorted_subset(subset, weights.vehicle_count());
  double max_row = 0.0;
  for (const auto& row : interaction_row_sums(weights, s))
    for (double v : row) max_row = std::max(max_row, v);
  double max_pi = 0.0;
  for (VehicleId i : s)
    for (double p : weights.penalties[i]) max_pi = std::max(max_pi, p);
  return std::max(max_row, 1.0 + max_pi);
}

double compute_lambda(const CongestionWeights& weights) { return compute_lambda(weights, all_vehicles(weights)); }

QuboInstance build_qubo(const CongestionWeights& weights, std::size_t k) {
  return build_qubo(weights, all_vehicles(weights), k);
}

QuboInstance build_qubo(const CongestionWeights& weights, std::span<const VehicleId> subset, std::size_t k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  QuboInstance q;
  q.k = k;
  q.vehicles = sorted_subset(subset, weights.vehicle_count());
  if (q.vehicles.empty()) throw ValidationError("QUBO needs at least one vehicle");
  for (VehicleId v : q.vehicles) {
    const auto& pi = weights.penalties[v];
    if (pi.size() > k) throw ValidationError(fmt::format("vehicle {} has more than k={} alternatives", v, k));
    q.real_alts.push_back(pi.size());
    q.shortest_alt.push_back(static_cast<std::size_t>(std::ranges::min_element(pi) - pi.begin()));
  }
  const auto block = block_lookup(q.vehicles, weights.vehicle_count());

  for (const auto& [key, value] : weights.w) {
    const auto bi = block[key.i];
    const auto bj = block[key.j];
    if (bi < 0 || bj < 0 || value == 0.0) continue;
    const VarIndex u = q.index(static_cast<std::size_t>(bi), key.a);
    const VarIndex v = q.index(static_cast<std::size_t>(bj), key.b);
    q.coeffs[{std::min(u, v), std::max(u, v)}] += value;
  }

  q.lambda = compute_lambda(weights, q.vehicles);
  q.offset = q.lambda * static_cast<double>(q.vehicles.size());

  // Expanding lambda * (1 - sum_a x_a)^2 gives 2*lambda on each unordered pair
  // and -lambda on each diagonal; placeholders get +lambda instead.
  for (std::size_t b = 0; b < q.vehicles.size(); ++b) {
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t c = a + 1; c < k; ++c) q.coeffs[{q.index(b, a), q.index(b, c)}] += 2.0 * q.lambda;
    const auto& pi = weights.penalties[q.vehicles[b]];
    for (std::size_t a = 0; a < k; ++a) {
      const VarIndex u = q.index(b, a);
      q.coeffs[{u, u}] += a < q.real_alts[b] ? -q.lambda + pi[a] : q.lambda;
    }
  }
  return q;
}

double energy(const QuboInstance& q, const Assignment& x) {
  if (x.size() != q.n_var())
    throw ValidationError(fmt::format("assignment length {} != n_var {}", x.size(), q.n_var()));
  double e = 0.0;
  for (const auto& [uv, c] : q.coeffs)
    if (x[uv.first] && x[uv.second]) e += c;
  return e + q.offset;
}

bool is_valid(const QuboInstance& q, const Assignment& x) {
  if (x.size() != q.n_var()) throw ValidationError("assignment length mismatch");
  for (std::size_t b = 0; b < q.block_count(); ++b) {
    std::size_t selected = 0;
    bool real = true;
    for (std::size_t a = 0; a < q.k; ++a) {
      if (!x[q.index(b, a)]) continue;
      ++selected;
      real = a < q.real_alts[b];
    }
    if (selected != 1 || !real) return false;
  }
  return true;
}

Assignment encode(const QuboInstance& q, std::span<const std::size_t> alts) {
  if (alts.size() != q.block_count()) throw ValidationError("one alternative per block required");
  Assignment x(q.n_var(), 0);
  for (std::size_t b = 0; b < alts.size(); ++b) {
    if (alts[b] >= q.k) throw ValidationError("alternative out of range");
    x[q.index(b, alts[b])] = 1;
  }
  return x;
}

std::vector<std::size_t> decode(const QuboInstance& q, const Assignment& x) {
  if (!is_valid(q, x)) throw ValidationError("cannot decode an invalid assignment");
  std::vector<std::size_t> alts(q.block_count());
  for (std::size_t b = 0; b < q.block_count(); ++b)
    for (std::size_t a = 0; a < q.k; ++a)
      if (x[q.index(b, a)]) alts[b] = a;
  return alts;
}

double qubo_density(const QuboInstance& q) {
  const double n = static_cast<double>(q.n_var());
  if (q.n_var() < 2) return 0.0;
  std::size_t nnz = 0;
  for (const auto& [uv, c] : q.coeffs)
    if (uv.first != uv.second && c != 0.0) ++nnz;
  return static_cast<double>(nnz) / (n * (n - 1.0) / 2.0);
}

void write_qubo(std::ostream& out, const QuboInstance& q) {
  fmt::print(out, "# QUBO coordinate list: u v value, u <= v\n");
  fmt::print(out, "n_var {}\nk {}\nlambda {}\noffset {}\n", q.n_var(), q.k, q.lambda, q.offset);
  fmt::print(out, "vehicles {}", q.vehicles.size());
  for (VehicleId v : q.vehicles) fmt::print(out, " {}", v);
  fmt::print(out, "\nreal_alts {}", q.real_alts.size());
  for (std::size_t r : q.real_alts) fmt::print(out, " {}", r);
  fmt::print(out, "\nnnz {}\n", q.coeffs.size());
  for (const auto& [uv, c] : q.coeffs) fmt::print(out, "{} {} {}\n", uv.first, uv.second, c);
}

QuboInstance read_qubo(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> tok;
  auto field = [&](std::string_view name, std::size_t min_tokens) {
    if (!reader.next(tok) || tok[0] != name || tok.size() < min_tokens)
      throw ParseError("expected '" + std::string(name) + "' header", reader.line());
  };
  QuboInstance q;
  field("n_var", 2);
  const std::size_t n_var = parse_count(tok[1], reader.line());
  field("k", 2);
  q.k = parse_count(tok[1], reader.line());
  if (q.k < 1) throw ParseError("k must be >= 1", reader.line());
  field("lambda", 2);
  q.lambda = parse_double(tok[1], reader.line());
  field("offset", 2);
  q.offset = parse_double(tok[1], reader.line());
  field("vehicles", 2);
  const std::size_t nv = parse_count(tok[1], reader.line());
  if (tok.size() != nv + 2) throw ParseError("vehicle count mismatch", reader.line());
  for (std::size_t i = 0; i < nv; ++i)
    q.vehicles.push_back(static_cast<VehicleId>(parse_count(tok[2 + i], reader.line())));
  field("real_alts", 2);
  if (parse_count(tok[1], reader.line()) != nv || tok.size() != nv + 2)
    throw ParseError("real_alts count mismatch", reader.line());
  for (std::size_t i = 0; i < nv; ++i) {
    q.real_alts.push_back(parse_count(tok[2 + i], reader.line()));
    if (q.real_alts.back() < 1 || q.real_alts.back() > q.k) throw ParseError("real_alts out of range", reader.line());
  }
  if (n_var != q.n_var()) throw ParseError("n_var does not equal vehicles * k", 0);
  field("nnz", 2);
  const std::size_t nnz = parse_count(tok[1], reader.line());
  for (std::size_t e = 0; e < nnz; ++e) {
    if (!reader.next(tok) || tok.size() != 3) throw ParseError("expected 'u v value'", reader.line());
    const auto u = static_cast<VarIndex>(parse_count(tok[0], reader.line()));
    const auto v = static_cast<VarIndex>(parse_count(tok[1], reader.line()));
    if (u > v || v >= n_var) throw ParseError("coefficient index out of range or below diagonal", reader.line());
    if (!q.coeffs.emplace(std::pair{u, v}, parse_double(tok[2], reader.line())).second)
      throw ParseError("duplicate coefficient", reader.line());
  }
  if (reader.next(tok)) throw ParseError("trailing content after coefficients", reader.line());
  // Real diagonals hold -lambda + penalty, so the smallest one marks the shortest route.
  for (std::size_t b = 0; b < nv; ++b) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.real_alts[b]; ++a)
      if (q.coeff(q.index(b, a), q.index(b, a)) < q.coeff(q.index(b, best), q.index(b, best))) best = a;
    q.shortest_alt.push_back(best);
  }
  return q;
}

void write_milp_lp(std::ostream& out, const QuboInstance& q) {
  auto term = [&](double c, const std::string& var) {
    fmt::print(out, " {} {} {}", c < 0.0 ? '-' : '+', std::abs(c), var);
  };
  auto y = [](VarIndex u, VarIndex v) { return fmt::format("y_{}_{}", u, v); };

  fmt::print(out, "\\ Linearized QUBO: n_var {}, lambda {}\n", q.n_var(), q.lambda);
  fmt::print(out, "\\ constant offset {} (add to the objective value)\n", q.offset);
  out << "Minimize\n obj:";
  std::vector<double> diag(q.n_var(), 0.0);
  std::vector<std::pair<VarIndex, VarIndex>> quad;
  for (const auto& [uv, c] : q.coeffs) {
    if (uv.first == uv.second)
      diag[uv.first] = c;
    else if (c != 0.0)
      quad.push_back(uv);
  }
  for (VarIndex u = 0; u < q.n_var(); ++u) term(diag[u], fmt::format("x_{}", u));
  for (auto [u, v] : quad) term(q.coeff(u, v), y(u, v));
  out << "\nSubject To\n";
  for (auto [u, v] : quad) {
    fmt::print(out, " c{0}_{1}_a: {2} - x_{0} <= 0\n", u, v, y(u, v));
    fmt::print(out, " c{0}_{1}_b: {2} - x_{1} <= 0\n", u, v, y(u, v));
    fmt::print(out, " c{0}_{1}_c: {2} - x_{0} - x_{1} >= -1\n", u, v, y(u, v));
  }
  out << "Binary\n";
  for (VarIndex u = 0; u < q.n_var(); ++u) fmt::print(out, " x_{}\n", u);
  for (auto [u, v] : quad) fmt::print(out, " {}\n", y(u, v));
  out << "End\n";
}

}  // namespace tfo
