#include <benchmark/benchmark.h>

#include "fracac/asymptotics.hpp"
#include "fracac/solver.hpp"

using namespace fracac;

namespace {

DomainPtr line(double h) { return build_context(1, 0.25, h, 8.0, Interval{-1, 1}); }

void BM_WeightAssembly1D(benchmark::State& state) {
  auto dom = line(1.0 / static_cast<double>(state.range(0)));
  for (auto _ : state) {
    FracOperator op(dom);
    benchmark::DoNotOptimize(op.weight(0, 1));
  }
}
BENCHMARK(BM_WeightAssembly1D)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_WeightAssembly2D(benchmark::State& state) {
  auto dom = build_context(2, 0.25, 0.1, static_cast<double>(state.range(0)), Disc{0, 0, 1});
  for (auto _ : state) {
    FracOperator op(dom);
    benchmark::DoNotOptimize(op.weight(0, 1));
  }
}
BENCHMARK(BM_WeightAssembly2D)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ApplyAll1D(benchmark::State& state) {
  auto dom = line(1.0 / static_cast<double>(state.range(0)));
  FracOperator op(dom);
  const auto u = sign_data(dom, 0.0, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(op.apply_all(u));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(dom->interior_count()));
}
BENCHMARK(BM_ApplyAll1D)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ApplyAll2D(benchmark::State& state) {
  auto dom = build_context(2, 0.25, 0.1, 4.0, Disc{0, 0, 1});
  FracOperator op(dom);
  const auto u = sign_data(dom, 0.0, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(op.apply_all(u));
}
BENCHMARK(BM_ApplyAll2D)->Unit(benchmark::kMillisecond);

void BM_Solve1D(benchmark::State& state) {
  auto dom = line(1.0 / static_cast<double>(state.range(0)));
  FracOperator op(dom);
  const auto g = sign_data(dom, 0.0, 0.05);
  const auto f = GridFunction::constant(dom, 0.0);
  const auto pot = make_quartic();
  SolveConfig cfg;
  cfg.eps = 0.1;
  cfg.grad_tol = 1e-9;
  for (auto _ : state) benchmark::DoNotOptimize(solve(g, pot, f, cfg, op));
}
BENCHMARK(BM_Solve1D)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
