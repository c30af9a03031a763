#include <doctest.h>

#include <cmath>

#include "gotu/errors.hpp"
#include "gotu/net.hpp"
#include "gotu/rng.hpp"

using namespace gotu;

namespace {

Eigen::MatrixXd random_pm1(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd x(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) x(r, c) = rng.coin() ? -1.0 : 1.0;
  }
  return x;
}

}  // namespace

TEST_CASE("backprop matches central finite differences on every parameter") {
  Rng rng(5);
  const int d = 4;
  FeedForwardNet net = FeedForwardNet::make(d, MlpSpec{{8, 8}}, 17);
  const Eigen::MatrixXd x = random_pm1(12, d, rng);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y(i) = rng.uniform(-1.0, 1.0);

  auto grads = net.zero_gradients();
  net.mse_backward(x, y, &grads);

  const double h = 1e-4;
  const auto check_param = [&](double* p, double analytic) {
    const double saved = *p;
    *p = saved + h;
    const double up = net.mse(x, y);
    *p = saved - h;
    const double down = net.mse(x, y);
    *p = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    CHECK(std::abs(numeric - analytic) / denom <= 1e-4);
  };
  for (int l = 0; l < net.layer_count(); ++l) {
    auto& w = net.weights()[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      check_param(w.data() + i, grads.w[l](i));
    }
    auto& b = net.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      check_param(b.data() + i, grads.b[l](i));
    }
  }
}

TEST_CASE("mean-field nets use the 1/N scaling and no output bias") {
  FeedForwardNet net = FeedForwardNet::make(5, MeanFieldSpec{64}, 3);
  CHECK(net.output_scale() == doctest::Approx(1.0 / 64.0));
  CHECK_FALSE(net.output_bias_enabled());
  CHECK(net.layer_count() == 2);
  // output weights are U(-1,1), first layer U(+-1/sqrt(d))
  CHECK(net.weights()[1].cwiseAbs().maxCoeff() <= 1.0);
  CHECK(net.weights()[0].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(5.0));
}

TEST_CASE("training reduces the seen-set loss and is seed deterministic") {
  GotuTask task;
  task.target = make_named(NamedTarget::F2, 8);
  task.domain = UnseenDomain(8, FrozenPattern{{0, 1}, {-1, -1}});
  task.high_monomial = Mask{0b11};
  TrainConfig cfg;
  cfg.optimizer = SgdConfig{5e-4, 64};
  cfg.epochs = 40;
  cfg.early_stop_loss = 1e-6;
  cfg.seed = 11;
  cfg.track_masks = {0, 0b01, 0b10, 0b11};

  const RunRecord a = train(MlpSpec{{64, 64}}, task, DataSpec{}, cfg);
  const RunRecord b = train(MlpSpec{{64, 64}}, task, DataSpec{}, cfg);
  REQUIRE(!a.checkpoints.empty());
  CHECK(a.final_train_loss < a.checkpoints.front().train_loss);
  CHECK(a.final_train_loss == b.final_train_loss);
  REQUIRE(a.checkpoints.size() == b.checkpoints.size());
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    CHECK(a.checkpoints[i].train_loss == b.checkpoints[i].train_loss);
    CHECK(a.checkpoints[i].tracked == b.checkpoints[i].tracked);
  }
  CHECK(std::isfinite(a.alpha_leak));
  CHECK(std::isfinite(a.final_gotu));
}

TEST_CASE("a zero-epoch run reports only the initial checkpoint") {
  GotuTask task;
  task.target = make_named(NamedTarget::F2, 6);
  task.domain = UnseenDomain(6, FrozenPattern{{0, 1}, {-1, -1}});
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 3;
  cfg.track_masks = {0b11};
  const RunRecord rec = train(MlpSpec{{16}}, task, DataSpec{}, cfg);
  CHECK(rec.total_steps == 0);
  REQUIRE(rec.checkpoints.size() == 1);
  CHECK(rec.checkpoints[0].step == 0);
}

TEST_CASE("interpolating f2 pins the learned coefficients to the family line") {
  GotuTask task;
  task.target = make_named(NamedTarget::F2, 8);
  task.domain = UnseenDomain(8, FrozenPattern{{0, 1}, {-1, -1}});
  task.high_monomial = Mask{0b11};
  TrainConfig cfg;
  cfg.optimizer = AdamConfig{1e-3, 256};
  cfg.epochs = 2000;
  cfg.early_stop_loss = 1e-4;
  cfg.seed = 21;
  const RunRecord rec = train(MlpSpec{{128, 128}}, task, DataSpec{}, cfg);
  REQUIRE(rec.final_train_loss <= 1e-4);
  const double alpha = rec.alpha_leak;
  CHECK(std::abs(rec.learned.coeff(0b01) - (1.0 - alpha)) <= 0.05);
  CHECK(std::abs(rec.learned.coeff(0b10) - (1.0 - alpha)) <= 0.05);
  CHECK(std::abs(rec.learned.coeff(0) + (1.0 - alpha)) <= 0.05);
}

TEST_CASE("exact tracking sits within the sampled tracker's error bars") {
  GotuTask task;
  task.target = make_named(NamedTarget::F2, 10);
  task.domain = UnseenDomain(10, FrozenPattern{{0, 1}, {-1, -1}});
  TrainConfig cfg;
  cfg.optimizer = SgdConfig{5e-4, 64};
  cfg.epochs = 30;
  cfg.seed = 9;
  const RunRecord rec = train(MlpSpec{{64, 64}}, task, DataSpec{}, cfg);
  REQUIRE(rec.learned.valid());
  // estimate a few coefficients by uniform sampling of the learned table
  Rng rng(123);
  for (Mask t : {Mask{0b01}, Mask{0b11}}) {
    const double exact = rec.learned.coeff(t);
    const std::size_t n = 1 << 15;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Point p = rng.bits() & 1023;
      const double v = chi(t, p) * rec.learned.value_at(p);
      const double delta = v - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (v - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(n - 1) /
                                static_cast<double>(n));
    CHECK(std::abs(mean - exact) <= 4.0 * se + 1e-9);
  }
}

TEST_CASE("divergence raises with the step index") {
  GotuTask task;
  task.target = make_named(NamedTarget::F2, 6);
  task.domain = UnseenDomain(6, FrozenPattern{{0, 1}, {-1, -1}});
  TrainConfig cfg;
  cfg.optimizer = SgdConfig{50.0, 16};  // absurd learning rate
  cfg.epochs = 50;
  cfg.seed = 5;
  CHECK_THROWS_AS(train(MlpSpec{{32, 32}}, task, DataSpec{}, cfg),
                  DivergenceError);
  const RunRecord rec = train_no_throw(MlpSpec{{32, 32}}, task, DataSpec{}, cfg);
  CHECK(rec.diverged);
  CHECK(rec.divergence_step >= 1);
}

TEST_CASE("lambda zero reproduces the unregularized trajectory exactly") {
  GotuTask task;
  task.target = make_named(NamedTarget::F2, 7);
  task.domain = UnseenDomain(7, FrozenPattern{{0, 1}, {-1, -1}});
  TrainConfig plain;
  plain.optimizer = SgdConfig{5e-4, 64};
  plain.epochs = 10;
  plain.seed = 77;
  TrainConfig reg = plain;
  reg.lambda_symmetry = 0.0;
  const RunRecord a = train(MlpSpec{{32, 32}}, task, DataSpec{}, plain);
  const RunRecord b = train(MlpSpec{{32, 32}}, task, DataSpec{}, reg);
  REQUIRE(a.checkpoints.size() == b.checkpoints.size());
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    CHECK(a.checkpoints[i].train_loss == b.checkpoints[i].train_loss);
  }
  CHECK(a.final_train_loss == b.final_train_loss);
}

TEST_CASE("the symmetry regularizer changes the trajectory when active") {
  GotuTask task;
  task.target = make_named(NamedTarget::F2, 7);
  task.domain = UnseenDomain(7, FrozenPattern{{0, 1}, {-1, -1}});
  TrainConfig plain;
  plain.optimizer = SgdConfig{5e-4, 64};
  plain.epochs = 5;
  plain.seed = 78;
  TrainConfig reg = plain;
  reg.lambda_symmetry = 1.0;
  reg.regularizer_samples = 64;
  const RunRecord a = train(MlpSpec{{32, 32}}, task, DataSpec{}, plain);
  const RunRecord b = train(MlpSpec{{32, 32}}, task, DataSpec{}, reg);
  CHECK(a.final_train_loss != b.final_train_loss);
}

TEST_CASE("lr table records divergence per learning rate") {
  GotuTask task;
  task.target = make_named(NamedTarget::F2, 6);
  task.domain = UnseenDomain(6, FrozenPattern{{0, 1}, {-1, -1}});
  task.high_monomial = Mask{0b11};
  TrainConfig cfg;
  cfg.optimizer = SgdConfig{5e-4, 64};
  cfg.epochs = 20;
  const auto rows = lr_sensitivity(MlpSpec{{32, 32}}, task, DataSpec{}, cfg,
                                   {1e-3, 50.0}, {1, 2});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_diverged == 0);
  CHECK(std::isfinite(rows[0].mean_alpha));
  CHECK(rows[1].n_diverged == 2);

  const auto single = lr_sensitivity(MlpSpec{{16}}, task, DataSpec{}, cfg,
                                     {1e-3}, {4});
  REQUIRE(single.size() == 1);
  CHECK(single[0].n_seeds == 1);
  CHECK(single[0].std_alpha == 0.0);
}

TEST_CASE("full-cube parity training recovers the target at small scale") {
  TrainConfig cfg;
  cfg.optimizer = AdamConfig{2e-3, 128};
  cfg.epochs = 1500;
  cfg.early_stop_loss = 1e-4;
  cfg.seed = 1;
  const auto rows = length_gen_experiment(6, {6}, MlpSpec{{128, 128}}, cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].full_parity_coeff >= 0.8);
}
