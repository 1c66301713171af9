// Serial reference vs OpenMP batch kernels.
#include "qwnpol/batch.hpp"

#include <benchmark/benchmark.h>

using namespace qwnpol;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }
const char* kArgName = "parallel";

void BM_ExactInverse(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(exact_inverse_batch(1, 2000, exec_of(st)));
}
BENCHMARK(BM_ExactInverse)->ArgName(kArgName)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PmdArc(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(pmd_arc_batch(1, 20000, 0.42, std::nullopt, exec_of(st)));
}
BENCHMARK(BM_PmdArc)->ArgName(kArgName)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Reroute(benchmark::State& st) {
  Scenario s;
  s.seed = 7;
  for (auto _ : st) benchmark::DoNotOptimize(reroute_batch(s, 200, exec_of(st)));
}
BENCHMARK(BM_Reroute)->ArgName(kArgName)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Visibility(benchmark::State& st) {
  const VisibilityParams p;
  for (auto _ : st) benchmark::DoNotOptimize(visibility_batch(1, 64, p, exec_of(st)));
}
BENCHMARK(BM_Visibility)->ArgName(kArgName)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
