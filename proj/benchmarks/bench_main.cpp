#include <benchmark/benchmark.h>

#include "lamcert/laminate.hpp"
#include "lamcert/realization.hpp"
#include "lamcert/threshold.hpp"
#include "lamcert/verification.hpp"

using namespace lamcert;

static void BM_Threshold(benchmark::State& state) {
  const double p = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(q1_threshold(p));
}
BENCHMARK(BM_Threshold)->Arg(15)->Arg(30)->Arg(40);

static void BM_BuildLaminate(benchmark::State& state) {
  const double b = q1_threshold(4.0).b_star;
  for (auto _ : state) benchmark::DoNotOptimize(build_laminate(static_cast<int>(state.range(0)), 4.0, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildLaminate)->RangeMultiplier(10)->Range(10, 100000)->Complexity(benchmark::oN);

static void BM_ValidateTree(benchmark::State& state) {
  const LaminateBuild lb = build_laminate(static_cast<int>(state.range(0)), 4.0, q1_threshold(4.0).b_star);
  for (auto _ : state) benchmark::DoNotOptimize(validate_split_tree(lb.tree, lb.laminate));
}
BENCHMARK(BM_ValidateTree)->Arg(100)->Arg(10000);

static void BM_OracleScan(benchmark::State& state) {
  const double b = q1_threshold(4.0).b_star;
  for (auto _ : state) benchmark::DoNotOptimize(oracle_integrals(static_cast<int>(state.range(0)), 4.0, b, 3.05));
}
BENCHMARK(BM_OracleScan)->Arg(1000)->Arg(100000);

static void BM_Realize(benchmark::State& state) {
  const LaminateBuild lb = build_laminate(static_cast<int>(state.range(0)), 4.0, q1_threshold(4.0).b_star);
  const double delta = min_support_distance(lb.laminate) / 4;
  for (auto _ : state) {
    const PWAffineMap map =
        realize_laminate(unit_square(), DomainKind::Square, lb.tree, lb.laminate, delta, 0.05, 32);
    state.counters["cells"] = static_cast<double>(map.cells.size());
  }
}
BENCHMARK(BM_Realize)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_ValidateMap(benchmark::State& state) {
  const LaminateBuild lb = build_laminate(2, 4.0, q1_threshold(4.0).b_star);
  const double delta = min_support_distance(lb.laminate) / 4;
  const PWAffineMap map = realize_laminate(unit_square(), DomainKind::Square, lb.tree, lb.laminate, delta, 0.05, 32);
  for (auto _ : state) benchmark::DoNotOptimize(validate_map(map, &lb.laminate));
}
BENCHMARK(BM_ValidateMap)->Unit(benchmark::kMillisecond);

static void BM_WeakResidual(benchmark::State& state) {
  const LaminateBuild lb = build_laminate(2, 4.0, q1_threshold(4.0).b_star);
  const double delta = min_support_distance(lb.laminate) / 4;
  const PWAffineMap map = realize_laminate(unit_square(), DomainKind::Square, lb.tree, lb.laminate, delta, 0.05, 32);
  const auto tests = default_test_functions(map);
  for (auto _ : state) benchmark::DoNotOptimize(weak_divergence_residual(map, tests));
}
BENCHMARK(BM_WeakResidual)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
