#include <benchmark/benchmark.h>

#include "gotu/random_features.hpp"

namespace {

void BM_RfFitCg(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int n_features = static_cast<int>(state.range(1));
  const auto task = gotu::make_leakage_task("parity2-pattern", d);
  const auto seen = task.domain.enumerate_seen();
  std::vector<double> labels(seen.size());
  const auto& tv = task.target.values();
  for (std::size_t i = 0; i < seen.size(); ++i) labels[i] = tv[seen[i]];

  gotu::FitOptions opts;
  opts.tol = 0.05;
  opts.max_cg_iters = 200;
  opts.throw_on_budget = false;
  for (auto _ : state) {
    auto model = gotu::make_rf_model(d, n_features,
                                     gotu::Activation::polynomial_power(6), 3);
    benchmark::DoNotOptimize(gotu::fit_min_norm(model, seen, labels, opts));
  }
}
BENCHMARK(BM_RfFitCg)->Args({8, 512})->Args({10, 2048});

void BM_RfExtract(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  auto model =
      gotu::make_rf_model(d, 2048, gotu::Activation::polynomial_power(6), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gotu::extract_fourier_exact(model));
  }
}
BENCHMARK(BM_RfExtract)->Arg(10)->Arg(12);

}  // namespace
