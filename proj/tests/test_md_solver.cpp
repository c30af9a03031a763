#include <doctest.h>

#include <cmath>

#include "gotu/errors.hpp"
#include "gotu/md_solver.hpp"
#include "gotu/rng.hpp"

using namespace gotu;

namespace {

void check_sparse_equal(const BooleanFunction& got,
                        const std::vector<std::pair<Mask, double>>& want,
                        double tol) {
  std::vector<double> expect(got.size(), 0.0);
  for (const auto& [t, c] : want) expect[t] += c;
  for (Mask t = 0; t < got.size(); ++t) {
    CHECK(std::abs(got.coeff(t) - expect[t]) <= tol);
  }
}

BooleanFunction random_sparse(int d, int terms, Rng& rng) {
  std::vector<std::pair<Mask, double>> list;
  for (int i = 0; i < terms; ++i) {
    list.emplace_back(rng.bits() & ((Mask{1} << d) - 1), rng.uniform(-2.0, 2.0));
  }
  return BooleanFunction::from_sparse_coeffs(d, list);
}

UnseenDomain random_frozen_pattern(int d, Rng& rng) {
  const int k = 1 + static_cast<int>(rng.integer(3));
  std::vector<int> coords;
  std::vector<int> values;
  while (static_cast<int>(coords.size()) < k) {
    const int c = static_cast<int>(rng.integer(d));
    bool dup = false;
    for (int existing : coords) dup |= existing == c;
    if (!dup) {
      coords.push_back(c);
      values.push_back(rng.coin() ? 1 : -1);
    }
  }
  return UnseenDomain(d, FrozenPattern{coords, values});
}

}  // namespace

TEST_CASE("f1 under the parity holdout gives the degree-1 interpolator") {
  const auto target = make_named(NamedTarget::F1, 15);
  const UnseenDomain domain(15, ParityConstraint{0b111, -1});
  const auto sol = solve_md(target, domain);
  check_sparse_equal(sol.md, {{0b001, -1.25}, {0b010, 1.5}, {0b100, 1.0}}, 1e-9);
  CHECK(sol.residual <= 1e-9);
}

TEST_CASE("f2 under the excluded pattern gives x1 + x0 - 1") {
  const auto target = make_named(NamedTarget::F2, 15);
  const UnseenDomain domain(15, FrozenPattern{{0, 1}, {-1, -1}});
  const auto sol = solve_md(target, domain);
  check_sparse_equal(sol.md, {{0, -1.0}, {0b01, 1.0}, {0b10, 1.0}}, 1e-9);
}

TEST_CASE("majority with two coordinates excluded replaces the cubic term") {
  const auto target = make_majority(3, {0, 1, 2});
  const UnseenDomain domain(3, FrozenPattern{{0, 1}, {-1, -1}});
  const auto sol = solve_md(target, domain);
  check_sparse_equal(sol.md,
                     {{0b001, 0.5},
                      {0b010, 0.5},
                      {0b100, 1.0},
                      {0b101, -0.5},
                      {0b110, -0.5}},
                     1e-9);
}

TEST_CASE("f3 keeps the cyclic tail and flattens only the excluded triple") {
  const auto target = make_named(NamedTarget::F3, 15);
  const UnseenDomain domain(15, FrozenPattern{{0, 1, 2}, {-1, -1, -1}});
  const auto sol = solve_md(target, domain);

  std::vector<std::pair<Mask, double>> expect;
  // replacement block: x0x1 + x1x2 + x2x0 - x0 - x1 - x2 + 1
  expect.emplace_back(0b011, 1.0);
  expect.emplace_back(0b110, 1.0);
  expect.emplace_back(0b101, 1.0);
  expect.emplace_back(0b001, -1.0);
  expect.emplace_back(0b010, -1.0);
  expect.emplace_back(0b100, -1.0);
  expect.emplace_back(0, 1.0);
  for (int i = 1; i < 15; ++i) {  // the remaining 14 cyclic terms
    expect.emplace_back((Mask{1} << i) | (Mask{1} << ((i + 1) % 15)) |
                            (Mask{1} << ((i + 2) % 15)),
                        1.0);
  }
  check_sparse_equal(sol.md, expect, 1e-9);
}

TEST_CASE("equality holdout keeps x_i + x_j instead of doubling one of them") {
  const int d = 6;
  const auto target = BooleanFunction::from_sparse_coeffs(
      d, {{0b001, 1.0}, {0b010, 1.0}});
  const UnseenDomain domain(d, EqualityConstraint{0, 1});
  const auto sol = solve_md(target, domain);
  check_sparse_equal(sol.md, {{0b001, 1.0}, {0b010, 1.0}}, 1e-9);
}

TEST_CASE("parity on a ball complement exposes the binomial bias") {
  for (const auto& [k, r] : std::vector<std::pair<int, int>>{{4, 1}, {5, 2}, {6, 3}}) {
    const int d = k;
    const auto target = make_parity(d, (Mask{1} << k) - 1);
    const UnseenDomain domain(d, BallComplement{r});
    const auto sol = solve_md(target, domain);
    double expected_bias = 1.0;
    for (int j = 0; j < r; ++j) {
      expected_bias = expected_bias * (k - 1 - j) / (j + 1);
    }
    if (r % 2) expected_bias = -expected_bias;
    CHECK(sol.md.coeff(0) == doctest::Approx(expected_bias).epsilon(1e-9));
    CHECK(sol.md.degree(1e-9) <= r);
    CHECK(sol.residual <= 1e-9);
  }
}

TEST_CASE("empty holdout returns the target itself") {
  const auto target = make_named(NamedTarget::F2, 6);
  const UnseenDomain domain(6, BallComplement{6});
  const auto sol = solve_md(target, domain);
  CHECK(sol.residual == 0.0);
  CHECK(sol.slack.empty());
  check_sparse_equal(sol.md, {{0b11, 1.0}}, 0.0);
}

TEST_CASE("md solution interpolates and dominates the target profile") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 6;
    const auto target = random_sparse(d, 4, rng);
    const auto domain = random_frozen_pattern(d, rng);
    const auto sol = solve_md(target, domain);
    CHECK(sol.residual <= 1e-9);
    CHECK(lex_compare(sol.achieved_profile, degree_profile(target)) <= 0);
    // slack entries are the pointwise gap on the unseen points
    const auto unseen = domain.enumerate_unseen();
    REQUIRE(sol.slack.size() == unseen.size());
    for (std::size_t i = 0; i < unseen.size(); ++i) {
      CHECK(sol.slack[i] == doctest::Approx(sol.md.value_at(unseen[i]) -
                                            target.value_at(unseen[i]))
                                .epsilon(1e-12));
    }
  }
}

TEST_CASE("no sampled slack vector beats the achieved profile") {
  Rng rng(515);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 5;
    const auto target = random_sparse(d, 3, rng);
    const auto domain = random_frozen_pattern(d, rng);
    const auto sol = solve_md(target, domain);
    const auto unseen = domain.enumerate_unseen();
    std::vector<double> coeffs = target.coeffs();
    for (int probe = 0; probe < 300; ++probe) {
      std::vector<double> c = coeffs;
      for (Point u : unseen) {
        const double t = rng.uniform(-2.0, 2.0);
        for (Mask m = 0; m < c.size(); ++m) c[m] += t * chi(m, u);
      }
      const auto candidate = BooleanFunction::from_coeffs(d, c);
      CHECK(lex_compare(sol.achieved_profile, degree_profile(candidate)) <= 0);
    }
  }
}

TEST_CASE("sparsity is preserved for frozen patterns on the support") {
  // target on coords {0,1,2}, pattern on {0,1}: the solution stays on {0,1,2}
  const int d = 10;
  const auto target = make_majority(d, {0, 1, 2});
  const UnseenDomain domain(d, FrozenPattern{{0, 1}, {-1, -1}});
  const auto sol = solve_md(target, domain);
  for (const auto& [t, c] : sol.md.sparse_coeffs(1e-10)) {
    CHECK((t & ~Mask{0b111}) == 0);
  }
}

TEST_CASE("restriction to a latent set filters coefficients") {
  const auto f = BooleanFunction::from_sparse_coeffs(
      6, {{0b000011, 1.0}, {0b000100, 2.0}, {0b110000, -1.0}});
  const auto g = restrict_to_latent(f, 0b000011);
  CHECK(g.coeff(0b000011) == doctest::Approx(1.0));
  CHECK(g.coeff(0b000100) == 0.0);
  CHECK(g.coeff(0b110000) == 0.0);

  // already-latent functions are unchanged
  const auto h = restrict_to_latent(g, 0b000011);
  for (Mask t = 0; t < 64; ++t) CHECK(h.coeff(t) == g.coeff(t));

  // restriction equals the conditional average over the complement
  Rng rng(8);
  std::vector<double> values(64);
  for (auto& v : values) v = rng.uniform(-1.0, 1.0);
  const auto q = BooleanFunction::from_values(6, values);
  const auto qr = restrict_to_latent(q, 0b000111);
  for (Mask t = 0; t < 64; ++t) {
    CHECK(qr.coeff(t) ==
          doctest::Approx((t & ~Mask{0b111}) == 0 ? q.coeff(t) : 0.0)
              .epsilon(1e-12));
  }
}

TEST_CASE("oracle at M = 1e4 lands within 1e-3 of the known interpolator") {
  const int d = 6;
  const auto target = make_named(NamedTarget::F2, d);
  const UnseenDomain domain(d, FrozenPattern{{0, 1}, {-1, -1}});
  const auto oracle = oracle_md(target, domain, 1e4);
  CHECK(std::abs(oracle.coeff(0) - (-1.0)) <= 1e-3);
  CHECK(std::abs(oracle.coeff(0b01) - 1.0) <= 1e-3);
  CHECK(std::abs(oracle.coeff(0b10) - 1.0) <= 1e-3);
  CHECK(std::abs(oracle.coeff(0b11)) <= 1e-3);
}

TEST_CASE("oracle with an empty holdout returns the target") {
  const auto target = make_named(NamedTarget::F2, 5);
  const UnseenDomain domain(5, BallComplement{5});
  const auto oracle = oracle_md(target, domain, 100.0);
  for (Mask t = 0; t < 32; ++t) {
    CHECK(oracle.coeff(t) == doctest::Approx(target.coeff(t)));
  }
  CHECK_THROWS_AS(oracle_md(target, domain, 2.0), InvalidInput);
}

TEST_CASE("oracle limit cross-validates the solver on random instances") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 6;
    const auto target = random_sparse(d, 3, rng);
    const auto domain = random_frozen_pattern(d, rng);
    const auto sol = solve_md(target, domain);
    const auto oracle = oracle_md_limit(target, domain);
    CHECK(oracle.converged);
    for (Mask t = 0; t < 64; ++t) {
      CHECK(std::abs(oracle.limit.coeff(t) - sol.md.coeff(t)) <= 1e-6);
    }
  }
}

TEST_CASE("two slack orderings give identical coefficients") {
  // uniqueness: solving through the latent path and the generic dense path
  // must agree to 1e-8
  const int d = 6;
  const auto target = make_majority(d, {0, 1, 2});
  const UnseenDomain latent_domain(d, FrozenPattern{{0, 1}, {-1, -1}});
  const UnseenDomain generic_domain(
      d, Explicit{latent_domain.enumerate_unseen()});
  const auto a = solve_md(target, latent_domain);
  const auto b = solve_md(target, generic_domain);
  for (Mask t = 0; t < 64; ++t) {
    CHECK(std::abs(a.md.coeff(t) - b.md.coeff(t)) <= 1e-8);
  }
}

TEST_CASE("oversized dense instances are refused") {
  CHECK_THROWS_AS(BooleanFunction::from_sparse_coeffs(26, {{0, 1.0}}),
                  InvalidInput);
  const UnseenDomain domain(13, Explicit{[] {
                              std::vector<Point> pts(4097);
                              for (std::size_t i = 0; i < pts.size(); ++i) {
                                pts[i] = i;
                              }
                              return pts;
                            }()});
  const auto small_target = make_parity(13, 0b11);
  CHECK_THROWS_AS(solve_md(small_target, domain), BudgetError);
}
