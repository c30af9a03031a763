#include <doctest.h>

#include <bit>
#include <cmath>

#include "gotu/errors.hpp"
#include "gotu/length_gen.hpp"
#include "gotu/md_solver.hpp"
#include "gotu/unseen_domain.hpp"

using namespace gotu;

TEST_CASE("k=3 r=1 closed form is x1+x2+x3-2") {
  const auto bi = parity_ball_equivalent(3, 1, 3);
  CHECK(bi.g.coeff(0) == doctest::Approx(-2.0));
  CHECK(bi.g.coeff(0b001) == doctest::Approx(1.0));
  CHECK(bi.g.coeff(0b010) == doctest::Approx(1.0));
  CHECK(bi.g.coeff(0b100) == doctest::Approx(1.0));
  CHECK(parity_ball_bias(3, 1) == -2);
}

TEST_CASE("k=5 r=2 bias is +6") {
  CHECK(parity_ball_bias(5, 2) == 6);
  const auto bi = parity_ball_equivalent(5, 2, 5);
  CHECK(bi.g.coeff(0) == doctest::Approx(6.0));
}

TEST_CASE("closed form coefficients match the raw product expansion") {
  // independent route: expand prod_{i in T}(x_i - 1) term by term
  const int k = 7, r = 3, d = 7;
  std::vector<double> expect(std::size_t{1} << d, 0.0);
  for (Mask t = 0; t < (Mask{1} << k); ++t) {
    if (set_size(t) > r) continue;
    for (Mask s = t;; s = (s - 1) & t) {
      expect[s] += ((set_size(t) - set_size(s)) % 2) ? -1.0 : 1.0;
      if (s == 0) break;
    }
  }
  const auto bi = parity_ball_equivalent(k, r, d);
  for (Mask t = 0; t < expect.size(); ++t) {
    CHECK(bi.g.coeff(t) == doctest::Approx(expect[t]).epsilon(1e-12));
  }
}

TEST_CASE("ball equivalent agrees with the parity on the whole ball") {
  const int k = 8, r = 3, d = 8;
  const auto bi = parity_ball_equivalent(k, r, d);
  const auto parity = make_parity(d, (Mask{1} << k) - 1);
  for (Point p = 0; p < (Point{1} << d); ++p) {
    if (std::popcount(p) <= r) {
      CHECK(bi.g.value_at(p) == doctest::Approx(parity.value_at(p)).epsilon(1e-10));
    }
  }
  CHECK(bi.g.degree(1e-10) <= r);
}

TEST_CASE("invalid radii are rejected") {
  CHECK_THROWS_AS(parity_ball_equivalent(3, 3, 5), InvalidInput);
  CHECK_THROWS_AS(parity_ball_equivalent(3, 5, 5), InvalidInput);
  CHECK_THROWS_AS(gotu_bound_check(4, 4, 6), InvalidInput);
}

TEST_CASE("linear solve reproduces the closed form for parities") {
  for (const auto& [k, r, d] :
       std::vector<std::tuple<int, int, int>>{{4, 1, 5}, {5, 2, 6}, {6, 3, 7}}) {
    const auto closed = parity_ball_equivalent(k, r, d);
    const auto solved = ball_interpolate(make_parity(d, (Mask{1} << k) - 1), r);
    CHECK(solved.residual <= 1e-8);
    CHECK(solved.condition_estimate >= 1.0);
    for (Mask t = 0; t < (Mask{1} << d); ++t) {
      CHECK(std::abs(solved.g.coeff(t) - closed.g.coeff(t)) <= 1e-8);
    }
  }
}

TEST_CASE("a function already below the radius is its own interpolator") {
  const auto f = make_majority(5, {0, 1, 2});  // degree 3
  const auto bi = ball_interpolate(f, 3);
  for (Mask t = 0; t < 32; ++t) {
    CHECK(std::abs(bi.g.coeff(t) - f.coeff(t)) <= 1e-10);
  }
}

TEST_CASE("majority on B_2 differs from majority only at the far corner") {
  const auto f = make_majority(3, {0, 1, 2});
  const auto bi = ball_interpolate(f, 2);
  CHECK(bi.g.degree(1e-10) <= 2);
  for (Point p = 0; p < 8; ++p) {
    if (std::popcount(p) <= 2) {
      CHECK(bi.g.value_at(p) == doctest::Approx(f.value_at(p)).epsilon(1e-9));
    } else {
      CHECK(std::abs(bi.g.value_at(p) - f.value_at(p)) > 0.5);
    }
  }
}

TEST_CASE("bound check: k=3 r=1 exceeds 4") {
  const auto gb = gotu_bound_check(3, 1, 3);
  CHECK(gb.bound == doctest::Approx(4.0));
  CHECK(gb.bias == -2);
  CHECK(gb.gotu > 4.0);
  CHECK(gb.pass);
}

TEST_CASE("bound at k = r+1 is one and monotone in k at fixed r") {
  CHECK(gotu_bound_check(4, 3, 6).bound == doctest::Approx(1.0));
  for (int r : {1, 2, 3}) {
    double prev = 0.0;
    for (int k = r + 1; k <= 10; ++k) {
      const auto gb = gotu_bound_check(k, r, 10);
      CHECK(gb.bound >= prev);
      prev = gb.bound;
    }
  }
}

TEST_CASE("gotu value equals the explicit mean squared error") {
  const int k = 5, r = 2, d = 5;
  const auto gb = gotu_bound_check(k, r, d);
  const auto bi = parity_ball_equivalent(k, r, d);
  const auto parity = make_parity(d, (Mask{1} << k) - 1);
  double mse = 0.0;
  for (Point p = 0; p < (Point{1} << d); ++p) {
    const double e = bi.g.value_at(p) - parity.value_at(p);
    mse += e * e;
  }
  mse /= static_cast<double>(Point{1} << d);
  CHECK(gb.gotu == doctest::Approx(mse).epsilon(1e-10));
}

TEST_CASE("md solver agrees with the unique ball interpolator") {
  const int k = 6, r = 2, d = 6;
  const auto parity = make_parity(d, (Mask{1} << k) - 1);
  const auto md = solve_md(parity, UnseenDomain(d, BallComplement{r}));
  const auto bi = ball_interpolate(parity, r);
  for (Mask t = 0; t < (Mask{1} << d); ++t) {
    CHECK(std::abs(md.md.coeff(t) - bi.g.coeff(t)) <= 1e-7);
  }
}
