#include <doctest.h>

#include <cmath>
#include <map>

#include "gotu/errors.hpp"
#include "gotu/random_features.hpp"

using namespace gotu;

namespace {

std::map<Mask, double> as_map(const std::vector<std::pair<Mask, double>>& v) {
  return {v.begin(), v.end()};
}

double get(const std::map<Mask, double>& m, Mask t) {
  auto it = m.find(t);
  return it == m.end() ? 0.0 : it->second;
}

}  // namespace

TEST_CASE("sampling is deterministic and matches the declared law") {
  const auto a = make_rf_model(6, 128, Activation::relu(), 5);
  const auto b = make_rf_model(6, 128, Activation::relu(), 5);
  CHECK(a.w == b.w);
  CHECK(a.b == b.b);
  CHECK(a.a.isZero());
  const auto c = make_rf_model(6, 128, Activation::relu(), 6);
  CHECK(a.w != c.w);
  // variance ~ 1/d
  const double emp_var = a.w.array().square().mean();
  CHECK(emp_var == doctest::Approx(1.0 / 6.0).epsilon(0.2));
}

TEST_CASE("zero feature count is rejected") {
  CHECK_THROWS_AS(make_rf_model(5, 0, Activation::relu(), 1), InvalidInput);
}

TEST_CASE("a zero-coefficient model has an empty spectrum") {
  const auto model = make_rf_model(5, 64, Activation::relu(), 2);
  CHECK(extract_fourier_exact(model).empty());
}

TEST_CASE("a single identity feature reproduces its coordinate") {
  RFModel model;
  model.d = 4;
  model.n_features = 1;
  model.w = Eigen::MatrixXd::Zero(1, 4);
  model.w(0, 0) = 1.0;
  model.b = Eigen::VectorXd::Zero(1);
  model.a = Eigen::VectorXd::Ones(1);  // a_1 = sqrt(N) with N = 1
  model.act = Activation::custom({-2.0, 2.0}, {-2.0, 2.0});
  const auto coeffs = as_map(extract_fourier_exact(model));
  CHECK(get(coeffs, 0b0001) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(coeffs.size() == 1);
}

TEST_CASE("direct fit interpolates an easy instance") {
  const int d = 6;
  const auto task = make_leakage_task("parity2-pattern", d);
  const auto seen = task.domain.enumerate_seen();
  std::vector<double> labels(seen.size());
  const auto& tv = task.target.values();
  for (std::size_t i = 0; i < seen.size(); ++i) labels[i] = tv[seen[i]];

  auto model = make_rf_model(d, 512, Activation::polynomial_power(6), 7);
  FitOptions opts;
  opts.method = FitMethod::Direct;
  const auto rep = fit_min_norm(model, seen, labels, opts);
  CHECK(rep.max_error <= 1e-6);

  // min-norm: a lies in the row space, i.e. gradient descent's limit
  auto cg_model = make_rf_model(d, 512, Activation::polynomial_power(6), 7);
  FitOptions cg;
  cg.method = FitMethod::ConjugateGradient;
  cg.max_cg_iters = 2000;
  cg.cg_gradient_tol = 1e-12;
  fit_min_norm(cg_model, seen, labels, cg);
  CHECK((model.a - cg_model.a).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("direct and plain gradient descent agree on a small instance") {
  const int d = 5;
  const auto task = make_leakage_task("parity2-pattern", d);
  const auto seen = task.domain.enumerate_seen();
  std::vector<double> labels(seen.size());
  const auto& tv = task.target.values();
  for (std::size_t i = 0; i < seen.size(); ++i) labels[i] = tv[seen[i]];

  auto direct = make_rf_model(d, 128, Activation::polynomial_power(4), 11);
  FitOptions opts;
  opts.method = FitMethod::Direct;
  fit_min_norm(direct, seen, labels, opts);

  auto gd = make_rf_model(d, 128, Activation::polynomial_power(4), 11);
  FitOptions gd_opts;
  gd_opts.method = FitMethod::GradientDescent;
  gd_opts.tol = 1e-7;
  gd_opts.max_steps = 2000000;
  const auto rep = fit_min_norm(gd, seen, labels, gd_opts);
  CHECK(rep.max_error <= 1e-7);
  CHECK((direct.a - gd.a).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("gradient descent reports non-convergence with the residual") {
  const int d = 5;
  const auto task = make_leakage_task("parity2-pattern", d);
  const auto seen = task.domain.enumerate_seen();
  std::vector<double> labels(seen.size(), 1.0);
  auto model = make_rf_model(d, 64, Activation::polynomial_power(4), 3);
  FitOptions opts;
  opts.method = FitMethod::GradientDescent;
  opts.tol = 1e-12;
  opts.max_steps = 50;
  CHECK_THROWS_AS(fit_min_norm(model, seen, labels, opts), ConvergenceError);
}

TEST_CASE("fitted models keep a in the row space of the features") {
  const int d = 6;
  const auto task = make_leakage_task("parity4-frozen", d);
  const auto seen = task.domain.enumerate_seen();
  std::vector<double> labels(seen.size());
  const auto& tv = task.target.values();
  for (std::size_t i = 0; i < seen.size(); ++i) labels[i] = tv[seen[i]];
  auto model = make_rf_model(d, 256, Activation::polynomial_power(6), 13);
  FitOptions opts;
  opts.method = FitMethod::Direct;
  fit_min_norm(model, seen, labels, opts);

  // null-space component: project a onto the complement of the row space
  Eigen::MatrixXd phi(seen.size(), model.n_features);
  const Eigen::MatrixXd x = points_to_matrix(d, seen);
  Eigen::MatrixXd z = x * model.w.transpose();
  z.rowwise() += model.b.transpose();
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      phi(r, c) = model.act(z(r, c)) / std::sqrt(256.0);
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-10 * sv(0)) ++rank;
  const Eigen::VectorXd in_row_space =
      svd.matrixV().leftCols(rank) *
      (svd.matrixV().leftCols(rank).transpose() * model.a);
  CHECK((model.a - in_row_space).norm() <= 1e-8 * model.a.norm());
}

TEST_CASE("sampled extraction brackets the exact coefficients") {
  const int d = 8;
  const auto task = make_leakage_task("parity2-pattern", d);
  const auto seen = task.domain.enumerate_seen();
  std::vector<double> labels(seen.size());
  const auto& tv = task.target.values();
  for (std::size_t i = 0; i < seen.size(); ++i) labels[i] = tv[seen[i]];
  auto model = make_rf_model(d, 512, Activation::polynomial_power(6), 17);
  FitOptions opts;
  opts.method = FitMethod::ConjugateGradient;
  fit_min_norm(model, seen, labels, opts);

  const std::vector<Mask> masks{0b01, 0b10, 0b11, 0};
  const auto sampled = extract_fourier_sampled(model, masks, 1 << 14, 23);
  for (const auto& sc : sampled) {
    const double exact = rf_coefficient_exact(model, sc.mask);
    CHECK(std::abs(sc.estimate - exact) <= 5.0 * sc.std_error + 1e-6);
  }
}

TEST_CASE("leakage report decomposes the learned coefficients") {
  const auto task = make_leakage_task("parity2-pattern", 6);
  // exactly the MD interpolator -> alpha = 0
  LeakageReport md_only =
      leakage({{0, -1.0}, {0b01, 1.0}, {0b10, 1.0}}, task);
  CHECK(md_only.alpha_leak == doctest::Approx(0.0));
  CHECK(md_only.residual <= 1e-12);
  // exactly the target -> alpha = 1
  LeakageReport target_only = leakage({{0b11, 1.0}}, task);
  CHECK(target_only.alpha_leak == doctest::Approx(1.0));
  CHECK(target_only.residual <= 1e-12);
  // halfway mixture
  LeakageReport mixed = leakage(
      {{0, -0.5}, {0b01, 0.5}, {0b10, 0.5}, {0b11, 0.5}}, task);
  CHECK(mixed.alpha_leak == doctest::Approx(0.5));
  CHECK(mixed.residual <= 1e-12);
}

TEST_CASE("hermite coefficients flag the expressive activations") {
  // (1+x)^3 has nonzero coefficients up to order 3
  CHECK(is_strongly_expressive(Activation::polynomial_power(3), 3));
  // z^2 is even: order-1 coefficient vanishes
  const auto sq = hermite_coeffs(Activation::square(), 2);
  CHECK(std::abs(sq[1]) <= 1e-12);
  CHECK_FALSE(is_strongly_expressive(Activation::square(), 1));
  // ReLU: zero coefficient at every odd order >= 3
  const auto relu = hermite_coeffs(Activation::relu(), 5);
  CHECK(std::abs(relu[1]) > 1e-3);
  CHECK(std::abs(relu[2]) > 1e-3);
  CHECK(std::abs(relu[3]) <= 1e-8);
  CHECK(std::abs(relu[5]) <= 1e-8);
  CHECK_FALSE(is_strongly_expressive(Activation::relu(), 3));
  CHECK(is_strongly_expressive(Activation::relu(), 2));
  CHECK_THROWS_AS(hermite_coeffs(Activation::relu(), 11), InvalidInput);
}

TEST_CASE("hermite values match the closed forms for ReLU") {
  // E[relu(g)] = 1/sqrt(2 pi); E[relu(g) g] = 1/2
  const auto c = hermite_coeffs(Activation::relu(), 1);
  CHECK(c[0] == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-10));
  CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("square activation has matching degree-1 and degree-2 slopes") {
  const auto table = feature_spectrum_scaling(Activation::square(),
                                              {6, 8, 10, 12}, {1, 2}, 300, 3);
  CHECK(table.slope_per_size.at(1) == doctest::Approx(-2.0).epsilon(0.3));
  CHECK(table.slope_per_size.at(2) == doctest::Approx(-2.0).epsilon(0.3));
}

TEST_CASE("strongly expressive activations decay like 1/d on degree one") {
  const auto table = feature_spectrum_scaling(
      Activation::polynomial_power(4), {6, 8, 10, 12}, {1}, 300, 9);
  const double slope = table.slope_per_size.at(1);
  CHECK(slope >= -1.5);
  CHECK(slope <= -0.5);
}

TEST_CASE("cross terms vanish within four standard errors") {
  const auto table = feature_spectrum_scaling(Activation::relu(),
                                              {10}, {1}, 400, 31);
  CHECK(std::abs(table.cross_term_mean) <=
        4.0 * table.cross_term_std_error + 1e-12);
}

TEST_CASE("asymmetry report stays finite even with one feature") {
  FitOptions opts;
  opts.method = FitMethod::ConjugateGradient;
  opts.tol = 10.0;  // interpolation impossible with one feature
  opts.throw_on_budget = false;
  const auto rep = relu_parity_asymmetry(6, 1, 3, opts);
  for (const auto& [t, c] : rep.relu_coeffs) CHECK(std::isfinite(c));
  for (const auto& [t, c] : rep.poly_coeffs) CHECK(std::isfinite(c));
}
