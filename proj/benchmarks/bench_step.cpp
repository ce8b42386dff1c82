#include <benchmark/benchmark.h>

#include "adaconv/dynamics.hpp"

using namespace adaconv;

static void BM_Step(benchmark::State& st) {
  const auto family = static_cast<Family>(st.range(0));
  const Objective obj = st.range(1) == 1 ? quad1d() : twodim();
  const OptimizerSpec spec{family, AdamVariant::kEps2Bias, HyperParams{}};
  Stepper stepper(spec, obj);
  State s = initial_state(spec, Vector::Constant(obj.dimension(), 0.5));
  for (auto _ : st) {
    stepper.step(s, s);
    if (s.t > 100000) s = initial_state(spec, Vector::Constant(obj.dimension(), 0.5));
    benchmark::DoNotOptimize(s.x.data());
  }
  st.SetLabel(std::string(to_string(family)));
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_Step)->ArgsProduct({{0, 1, 2, 3, 4}, {1, 2}});
