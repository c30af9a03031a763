#include <benchmark/benchmark.h>

#include "gotu/md_solver.hpp"

namespace {

void BM_SolveMdNamed(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto target = gotu::make_named(gotu::NamedTarget::F1, d);
  const gotu::UnseenDomain domain(d, gotu::ParityConstraint{0b111, -1});
  for (auto _ : state) {
    benchmark::DoNotOptimize(gotu::solve_md(target, domain));
  }
}
BENCHMARK(BM_SolveMdNamed)->Arg(10)->Arg(15);

void BM_SolveMdBall(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto target = gotu::make_parity(d, (gotu::Mask{1} << d) - 1);
  const gotu::UnseenDomain domain(d, gotu::BallComplement{2});
  for (auto _ : state) {
    benchmark::DoNotOptimize(gotu::solve_md(target, domain));
  }
}
BENCHMARK(BM_SolveMdBall)->Arg(6)->Arg(8);

}  // namespace
