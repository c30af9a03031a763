#include <benchmark/benchmark.h>

#include "gotu/boolean_function.hpp"
#include "gotu/rng.hpp"

namespace {

void BM_Transform(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  gotu::Rng rng(7);
  std::vector<double> values(std::size_t{1} << d);
  for (auto& v : values) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    std::vector<double> work = values;
    gotu::wht_inplace(work);
    benchmark::DoNotOptimize(work.data());
  }
  state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << d));
}
BENCHMARK(BM_Transform)->Arg(10)->Arg(15)->Arg(20);

void BM_DegreeProfile(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  gotu::Rng rng(11);
  std::vector<double> values(std::size_t{1} << d);
  for (auto& v : values) v = rng.uniform(-1.0, 1.0);
  const auto f = gotu::BooleanFunction::from_values(d, values);
  f.coeffs();
  for (auto _ : state) {
    benchmark::DoNotOptimize(gotu::degree_profile(f));
  }
}
BENCHMARK(BM_DegreeProfile)->Arg(12)->Arg(16);

}  // namespace
