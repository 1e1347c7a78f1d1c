#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tfo/error.hpp"
#include "tfo/qubo.hpp"

using namespace tfo;

namespace {

CongestionWeights zero_weights(std::vector<std::vector<double>> pi) {
  CongestionWeights w;
  w.penalties = std::move(pi);
  return w;
}

double matrix_energy_oracle(const oracle::Dense& d, double lam, const oracle::Bits& x) {
  return oracle::cost_term(d, x) + oracle::penalty_term(d, lam, x) + oracle::placeholder_term(d, lam, x);
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t c = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++c;
  return c;
}

}  // namespace

TEST_CASE("lambda: floor, single interaction, dense oracle") {
  CHECK(compute_lambda(zero_weights({{0.0, 0.0}, {0.0}})) == 1.0);

  CongestionWeights w = zero_weights({{0.0}, {0.0}});
  w.add(0, 1, 0, 0, 7.0);
  CHECK(compute_lambda(w) == 7.0);
  const auto rows = interaction_row_sums(w, std::vector<VehicleId>{0, 1});
  CHECK(rows == std::vector<std::vector<double>>{{7.0}, {7.0}});

  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto d = oracle::random_dense(5, 3, rng, 0.4, 0.3);
    CHECK(compute_lambda(oracle::to_weights(d)) == doctest::Approx(oracle::lambda(d)).epsilon(1e-12));
  }
}

TEST_CASE("lambda floor wins over small interactions when a penalty is large") {
  CongestionWeights w = zero_weights({{0.0, 60.0}, {0.0}});
  w.add(0, 1, 1, 0, 3.0);
  CHECK(compute_lambda(w) == 61.0);
}

TEST_CASE("n=1, k=2 matrix") {
  const QuboInstance q = build_qubo(zero_weights({{0.0, 60.0}}), 2);
  const double lam = q.lambda;
  CHECK(lam == 61.0);
  CHECK(q.coeff(0, 0) == -lam);
  CHECK(q.coeff(1, 1) == -lam + 60.0);
  CHECK(q.coeff(0, 1) == 2.0 * lam);
  CHECK(q.coeff(1, 0) == 2.0 * lam);
  CHECK(q.offset == lam);
  CHECK(q.shortest_alt == std::vector<std::size_t>{0});
}

TEST_CASE("placeholder alternative gets +lambda on the diagonal") {
  const QuboInstance q = build_qubo(zero_weights({{0.0}, {0.0, 5.0}}), 2);
  CHECK(q.real_alts == std::vector<std::size_t>{1, 2});
  CHECK_FALSE(q.is_real(1));
  CHECK(q.not_real() == std::vector<VarIndex>{1});
  CHECK(q.coeff(1, 1) == q.lambda);
  CHECK(q.coeff(0, 0) == -q.lambda);
  CHECK(q.coeff(3, 3) == -q.lambda + 5.0);
}

TEST_CASE("matrix energy equals the direct formula on every bit string") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 3 + t % 2, k = 2 + t % 3 / 2;
    const auto d = oracle::random_dense(n, k, rng, 0.5, t < 10 ? 0.0 : 0.4);
    const QuboInstance q = build_qubo(oracle::to_weights(d), k);
    const double lam = oracle::lambda(d);
    REQUIRE(q.lambda == doctest::Approx(lam).epsilon(1e-12));
    const std::uint64_t states = std::uint64_t{1} << (n * k);
    for (std::uint64_t m = 0; m < states; ++m) {
      const auto x = oracle::bits_of(m, n * k);
      const double e = energy(q, x);
      const double expect = matrix_energy_oracle(d, lam, x);
      if (!oracle::close(e, expect)) FAIL_CHECK("mask " << m << ": " << e << " vs " << expect);
    }
  }
}

TEST_CASE("energy anchors") {
  std::mt19937_64 rng(3);
  const auto d = oracle::random_dense(4, 2, rng);
  const QuboInstance q = build_qubo(oracle::to_weights(d), 2);
  CHECK(energy(q, Assignment(8, 0)) == doctest::Approx(q.lambda * 4).epsilon(1e-12));
  CHECK(q.offset == doctest::Approx(q.lambda * 4).epsilon(1e-15));

  const QuboInstance z = build_qubo(zero_weights({{0.0, 30.0}, {12.0, 0.0}, {0.0}}), 2);
  const std::vector<std::size_t> shortest{0, 1, 0};
  CHECK(z.shortest_alt == shortest);
  CHECK(energy(z, encode(z, shortest)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(energy(z, Assignment(5, 0)), ValidationError);
}

TEST_CASE("validity agrees with brute-force feasibility") {
  std::mt19937_64 rng(8);
  const auto d = oracle::random_dense(3, 3, rng, 0.3, 0.7);
  const QuboInstance q = build_qubo(oracle::to_weights(d), 3);
  std::size_t feasible = 0;
  for (std::uint64_t m = 0; m < (1u << 9); ++m) {
    const auto x = oracle::bits_of(m, 9);
    CHECK(is_valid(q, x) == oracle::one_hot_real(d, x));
    feasible += oracle::one_hot_real(d, x);
  }
  CHECK(feasible == d.real[0] * d.real[1] * d.real[2]);

  const QuboInstance two = build_qubo(zero_weights({{0.0, 1.0}, {0.0}}), 2);
  CHECK(is_valid(two, {1, 0, 1, 0}));
  CHECK_FALSE(is_valid(two, {1, 1, 1, 0}));
  CHECK_FALSE(is_valid(two, {1, 0, 0, 1}));  // placeholder
}

TEST_CASE("encode and decode") {
  const QuboInstance q = build_qubo(zero_weights({{0.0, 1.0, 2.0}, {0.0, 4.0}}), 3);
  const std::vector<std::size_t> alts{2, 1};
  const Assignment x = encode(q, alts);
  CHECK(x == Assignment{0, 0, 1, 0, 1, 0});
  CHECK(decode(q, x) == alts);
  CHECK_THROWS(decode(q, Assignment{1, 1, 0, 0, 1, 0}));
}

TEST_CASE("subset build drops outside interactions") {
  std::mt19937_64 rng(17);
  const auto d = oracle::random_dense(6, 2, rng, 0.6, 0.3);
  const std::vector<VehicleId> subset{4, 1, 3};
  const QuboInstance q = build_qubo(oracle::to_weights(d), subset, 2);
  CHECK(q.vehicles == std::vector<VehicleId>{1, 3, 4});

  oracle::Dense sub;
  sub.n = 3;
  sub.k = 2;
  const std::vector<std::size_t> ids{1, 3, 4};
  for (std::size_t i : ids) {
    sub.real.push_back(d.real[i]);
    sub.pi.push_back(d.pi[i]);
  }
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t y = x + 1; y < 3; ++y)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          if (const double v = d.weight(ids[x], ids[y], a, b); v != 0.0) sub.w[{x, y, a, b}] = v;
  const double lam = oracle::lambda(sub);
  CHECK(q.lambda == doctest::Approx(lam).epsilon(1e-12));
  CHECK(compute_lambda(oracle::to_weights(d), subset) == doctest::Approx(lam).epsilon(1e-12));
  for (std::uint64_t m = 0; m < 64; ++m) {
    const auto x = oracle::bits_of(m, 6);
    CHECK(oracle::close(energy(q, x), matrix_energy_oracle(sub, lam, x)));
  }
}

TEST_CASE("lambda keeps every invalid state above the feasible optimum") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + t % 4;
    const auto d = oracle::random_dense(n, 2, rng, 0.7, 0.2, 200.0, 100.0);
    const QuboInstance q = build_qubo(oracle::to_weights(d), 2);
    double best_valid = std::numeric_limits<double>::infinity(), best_invalid = best_valid;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << (2 * n)); ++m) {
      const auto x = oracle::bits_of(m, 2 * n);
      double& slot = oracle::one_hot_real(d, x) ? best_valid : best_invalid;
      slot = std::min(slot, energy(q, x));
    }
    CHECK(best_invalid > best_valid);
    CHECK(best_valid == doctest::Approx(oracle::feasible_optimum(d)).epsilon(1e-12));
  }
}

TEST_CASE("density") {
  for (std::size_t n : {1u, 2u, 5u}) {
    std::vector<std::vector<double>> pi(n, {0.0, 1.0});
    const QuboInstance q = build_qubo(zero_weights(pi), 2);
    const double pairs = static_cast<double>(2 * n) * static_cast<double>(2 * n - 1) / 2.0;
    CHECK(qubo_density(q) == doctest::Approx(static_cast<double>(n) / pairs));
  }
  CHECK(qubo_density(build_qubo(zero_weights({{0.0}}), 1)) == 0.0);

  CongestionWeights full = zero_weights({{0.0, 1.0}, {0.0, 2.0}});
  for (std::uint32_t a : {0u, 1u})
    for (std::uint32_t b : {0u, 1u}) full.add(0, 1, a, b, 1.0 + a + b);
  CHECK(qubo_density(build_qubo(full, 2)) == 1.0);
}

TEST_CASE("COO file round trip and malformed input") {
  std::mt19937_64 rng(29);
  const auto d = oracle::random_dense(4, 3, rng, 0.5, 0.5);
  const QuboInstance q = build_qubo(oracle::to_weights(d), 3);
  std::stringstream s;
  write_qubo(s, q);
  const std::string text = s.str();
  const QuboInstance back = read_qubo(s);
  CHECK(back.coeffs == q.coeffs);
  CHECK(back.lambda == q.lambda);
  CHECK(back.offset == q.offset);
  CHECK(back.vehicles == q.vehicles);
  CHECK(back.real_alts == q.real_alts);
  CHECK(back.shortest_alt == q.shortest_alt);
  std::stringstream again;
  write_qubo(again, back);
  CHECK(again.str() == text);

  auto parse = [](const std::string& t) {
    std::istringstream in(t);
    return read_qubo(in);
  };
  const std::string head = "n_var 2\nk 2\nlambda 3\noffset 3\nvehicles 1 0\nreal_alts 1 2\n";
  CHECK_NOTHROW(parse(head + "nnz 1\n0 1 6\n"));
  CHECK_THROWS_AS(parse(head + "nnz 1\n1 0 6\n"), ParseError);
  CHECK_THROWS_AS(parse(head + "nnz 1\n0 2 6\n"), ParseError);
  CHECK_THROWS_AS(parse(head + "nnz 2\n0 1 6\n0 1 6\n"), ParseError);
  CHECK_THROWS_AS(parse(head + "nnz 2\n0 1 6\n"), ParseError);
  CHECK_THROWS_AS(parse(head + "nnz 1\n0 1 6\n1 1 2\n"), ParseError);
  CHECK_THROWS_AS(parse("n_var 3\nk 2\nlambda 3\noffset 3\nvehicles 1 0\nreal_alts 1 2\nnnz 0\n"), ParseError);
  CHECK_THROWS_AS(parse("n_var 2\nk 2\nlambda 3\noffset 3\nvehicles 1 0\nreal_alts 1 3\nnnz 0\n"), ParseError);
}

TEST_CASE("LP export: counts and optimum") {
  {
    const QuboInstance q = build_qubo(zero_weights({{0.0, 60.0}}), 2);
    std::ostringstream s;
    write_milp_lp(s, q);
    const auto lp = oracle::parse_lp(s.str());
    CHECK(lp.binaries.size() == 3);
    CHECK(count(s.str(), "y_0_1") == 5);
    CHECK(lp.rows.size() == 3);
    CHECK(lp.offset == q.offset);
    CHECK(oracle::lp_optimum(lp) == doctest::Approx(0.0).epsilon(1e-12));
  }
  std::mt19937_64 rng(31);
  for (int t = 0; t < 12; ++t) {
    const std::size_t n = 2 + t % 2;
    const auto d = oracle::random_dense(n, 2, rng, n == 2 ? 0.5 : 0.15, 0.2);
    const QuboInstance q = build_qubo(oracle::to_weights(d), 2);
    std::ostringstream s;
    write_milp_lp(s, q);
    const auto lp = oracle::parse_lp(s.str());
    std::size_t z = 0;
    for (const auto& [uv, c] : q.coeffs) z += uv.first != uv.second && c != 0.0;
    CHECK(lp.binaries.size() == q.n_var() + z);
    CHECK(lp.rows.size() == 3 * z);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << q.n_var()); ++m)
      best = std::min(best, energy(q, oracle::bits_of(m, q.n_var())));
    CHECK(oracle::lp_optimum(lp) == doctest::Approx(best).epsilon(1e-9));
  }
}
