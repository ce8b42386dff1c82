#include <benchmark/benchmark.h>

#include "adaconv/stability.hpp"

using namespace adaconv;

static void BM_NumericalJacobianEigen(benchmark::State& st) {
  const Objective obj = twodim();
  const OptimizerSpec spec{Family::kAdam, AdamVariant::kEps2NoBias, HyperParams{}};
  const State star = fixed_point(spec, obj, *obj.minimum());
  for (auto _ : st) {
    benchmark::DoNotOptimize(spectral_radius(eigenvalues(numerical_jacobian(spec, obj, star))));
  }
}
BENCHMARK(BM_NumericalJacobianEigen);

static void BM_ClosedFormEigen(benchmark::State& st) {
  const Objective obj = twodim();
  const OptimizerSpec spec{Family::kAdam, AdamVariant::kEps2NoBias, HyperParams{}};
  for (auto _ : st) {
    const auto spectrum = hessian_spectrum(obj, *obj.minimum());
    benchmark::DoNotOptimize(spectral_radius(closed_form_eigs(spec, spectrum).eigenvalues));
  }
}
BENCHMARK(BM_ClosedFormEigen);
