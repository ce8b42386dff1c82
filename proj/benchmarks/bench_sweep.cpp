#include <benchmark/benchmark.h>

#include "adaconv/experiments.hpp"

using namespace adaconv;

static void BM_Sweep(benchmark::State& st) {
  SweepSpec spec = preset("exp1");
  spec.axis1.count = 10;
  spec.axis2.count = 10;
  spec.iterations = 1000;
  for (auto _ : st) {
    benchmark::DoNotOptimize(sweep(spec, static_cast<int>(st.range(0))).cells.data());
  }
  st.SetItemsProcessed(st.iterations() * 100);
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
