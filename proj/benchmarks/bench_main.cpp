#include <benchmark/benchmark.h>

#include "sdekit/brownian.hpp"
#include "sdekit/g_transform.hpp"
#include "sdekit/schemes.hpp"

namespace {

using namespace sdekit;

SdeProblem p1() {
  return SdeProblem(0.0,
                    PiecewiseDrift({0.0}, {FunctionSpec::constant(1.0), FunctionSpec::constant(-1.0)},
                                   std::vector<double>{-1.0}),
                    Diffusion(FunctionSpec::constant(1.0)));
}

void BM_GeneratePath(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t idx = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_path(SeedSpec{1}, idx++, n));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GeneratePath)->Arg(1 << 10)->Arg(1 << 14);

void BM_EmDiscrete(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto problem = p1();
  const auto path = generate_path(SeedSpec{1}, 0, n);
  for (auto _ : state) benchmark::DoNotOptimize(em_discrete(problem, path.increments()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmDiscrete)->Arg(1 << 10)->Arg(1 << 14);

void BM_EmContinuousOnFine(benchmark::State& state) {
  const auto problem = p1();
  const auto path = generate_path(SeedSpec{1}, 0, 1 << 14);
  for (auto _ : state) {
    benchmark::DoNotOptimize(em_continuous_on_fine(problem, path, static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_EmContinuousOnFine)->Arg(16)->Arg(1024);

void BM_GInverse(benchmark::State& state) {
  const auto t = build_transform(p1());
  double y = -0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(t.inverse(y));
    y = y > 0.3 ? -0.3 : y + 1e-3;
  }
}
BENCHMARK(BM_GInverse);

void BM_TransformedEm(benchmark::State& state) {
  const auto problem = p1();
  const auto t = build_transform(problem);
  const auto tp = transformed_problem(t, problem);
  const auto path = generate_path(SeedSpec{1}, 0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(transformed_em(tp, path.increments()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TransformedEm)->Arg(1 << 10)->Arg(1 << 14);

}  // namespace

BENCHMARK_MAIN();
