#include <benchmark/benchmark.h>

#include "saptune/problems.hpp"
#include "saptune/sap.hpp"
#include "saptune/sketch.hpp"

using namespace saptune;

namespace {

const LsProblem& desk_problem() {
  static LsProblem p = [] {
    LsProblem q = generate_problem(ProblemKind::GA, 10000, 200, 1);
    direct_solve(q);
    return q;
  }();
  return p;
}

void BM_SketchApply(benchmark::State& state) {
  const LsProblem& p = desk_problem();
  const auto kind = static_cast<SketchKind>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const SketchOperator S = sample_operator(kind, 5 * p.cols(), p.rows(), k, 7);
  for (auto _ : state) benchmark::DoNotOptimize(apply(S, p.A));
}
BENCHMARK(BM_SketchApply)
    ->ArgsProduct({{static_cast<int>(SketchKind::SJLT), static_cast<int>(SketchKind::LessUniform)}, {1, 10, 50}})
    ->Unit(benchmark::kMillisecond);

void BM_SolveSap(benchmark::State& state) {
  const LsProblem& p = desk_problem();
  Configuration c;
  c.sap_algorithm = static_cast<SapAlgorithm>(state.range(0));
  c.sketching_operator = SketchKind::LessUniform;
  c.sampling_factor = 3.0;
  c.vec_nnz = 10;
  for (auto _ : state) benchmark::DoNotOptimize(solve_sap(p, c, 3));
}
BENCHMARK(BM_SolveSap)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
