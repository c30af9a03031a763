// Slower qualitative trend checks for the training ops; the full-size
// versions live in the acceptance suite.
#include <doctest.h>

#include <cmath>

#include "gotu/net.hpp"
#include "gotu/random_features.hpp"

using namespace gotu;

TEST_CASE("larger learning rates leak more on the pattern task") {
  GotuTask task;
  const int d = 8;
  task.target = make_named(NamedTarget::F2, d);
  task.domain = UnseenDomain(d, FrozenPattern{{0, 1}, {-1, -1}});
  task.high_monomial = Mask{0b11};
  TrainConfig cfg;
  cfg.optimizer = SgdConfig{1e-3, 64};
  cfg.epochs = 600;
  cfg.early_stop_loss = 1e-4;
  const auto rows =
      lr_sensitivity(MlpSpec{{128, 128, 64}}, task, DataSpec{}, cfg,
                     {1e-4, 1e-3, 1e-2, 1e-1}, {1, 2, 3});
  REQUIRE(rows.size() == 4);
  int inversions = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].n_diverged < rows[i].n_seeds);
    if (rows[i].mean_alpha + rows[i].std_alpha + 1e-9 <
        rows[i - 1].mean_alpha) {
      ++inversions;
    }
  }
  CHECK(inversions <= 1);
}

TEST_CASE("absurd learning rates trip the divergence flag") {
  GotuTask task;
  const int d = 8;
  task.target = make_named(NamedTarget::F2, d);
  task.domain = UnseenDomain(d, FrozenPattern{{0, 1}, {-1, -1}});
  task.high_monomial = Mask{0b11};
  TrainConfig cfg;
  cfg.optimizer = SgdConfig{1e-3, 64};
  cfg.epochs = 100;
  const auto rows = lr_sensitivity(MlpSpec{{128, 128, 64}}, task, DataSpec{},
                                   cfg, {1.0}, {1, 2});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n_diverged == 2);
}

TEST_CASE("mean-field training needs and tolerates huge learning rates") {
  GotuTask task;
  const int d = 8;
  task.target = make_named(NamedTarget::F2, d);
  task.domain = UnseenDomain(d, FrozenPattern{{0, 1}, {-1, -1}});
  task.high_monomial = Mask{0b11};
  TrainConfig cfg;
  cfg.optimizer = SgdConfig{100.0, 64};
  cfg.epochs = 800;
  cfg.early_stop_loss = 1e-3;
  cfg.seed = 3;
  const RunRecord rec = train(MeanFieldSpec{1 << 12}, task, DataSpec{}, cfg);
  CHECK(rec.final_train_loss <= 1e-2);
  CHECK(rec.alpha_leak > 0.0);
  CHECK(rec.alpha_leak < 1.0);
}

TEST_CASE("rf leakage drops when the ambient dimension grows") {
  // two-point version of the dimension sweep
  double alpha_small = 0.0, alpha_large = 0.0;
  for (const int d : {8, 12}) {
    const auto task = make_leakage_task("parity2-pattern", d);
    const auto seen = task.domain.enumerate_seen();
    std::vector<double> labels(seen.size());
    const auto& tv = task.target.values();
    for (std::size_t i = 0; i < seen.size(); ++i) labels[i] = tv[seen[i]];
    double acc = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
      RFModel model =
          make_rf_model(d, 1024, Activation::polynomial_power(6), seed);
      FitOptions fit;
      fit.tol = 0.05;
      fit.throw_on_budget = false;
      fit.max_cg_iters = 600;
      fit_min_norm(model, seen, labels, fit);
      acc += leakage(extract_fourier_exact(model, 1e-8), task).alpha_leak;
    }
    (d == 8 ? alpha_small : alpha_large) = acc / 3.0;
  }
  CHECK(alpha_large < alpha_small);
}
