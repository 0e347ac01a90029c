// OpenMP field kernels against their serial references. Arguments are the grid
// edge n; 2D grids are n x n, 3D grids n x n x n.

#include <benchmark/benchmark.h>

#include "evarfluid/kernels.hpp"
#include "evarfluid/operators.hpp"
#include "evarfluid/parallel.hpp"

using namespace evf;

namespace {

ConstitutiveSet power_law_set() {
  return {ConstitutiveFunction::power_law(1.0, 1.5), ConstitutiveFunction::power_law(0.5, 2.0),
          ConstitutiveFunction::power_law(0.3, 1.5), ConstitutiveFunction::newtonian(0.1),
          ConstitutiveFunction::newtonian(0.1)};
}

Grid bench_grid(const benchmark::State& state, bool three_d) {
  const auto n = static_cast<std::size_t>(state.range(0));
  return Grid::make(n, n, three_d ? n : 1, 1.0, 1.0, 1.0);
}

TensorField velocity_gradient(const Grid& g) {
  const Operators ops(g);
  return ops.grad_tensor(random_band_limited_vector(g, 1, 1.0, false));
}

using StressFn = TensorField (*)(const TensorField&, const ScalarField&, const ConstitutiveSet&);
using ScalarFn = ScalarField (*)(const TensorField&, const ConstitutiveSet&);
using FluxFn = VectorField (*)(const VectorField&, const ConstitutiveFunction&);

void stress(benchmark::State& state, StressFn fn, bool three_d) {
  const Grid g = bench_grid(state, three_d);
  const TensorField gv = velocity_gradient(g);
  const ScalarField sigma(g, 0.5);
  const ConstitutiveSet cs = power_law_set();
  for (auto _ : state) benchmark::DoNotOptimize(fn(gv, sigma, cs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

void scalar_kernel(benchmark::State& state, ScalarFn fn) {
  const Grid g = bench_grid(state, false);
  const TensorField gv = velocity_gradient(g);
  const ConstitutiveSet cs = power_law_set();
  for (auto _ : state) benchmark::DoNotOptimize(fn(gv, cs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

void flux(benchmark::State& state, FluxFn fn) {
  const Grid g = bench_grid(state, false);
  const VectorField grad = random_band_limited_vector(g, 2, 1.0, false);
  const auto e = ConstitutiveFunction::power_law(1.0, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(fn(grad, e));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

void ordered_sum(benchmark::State& state) {
  const Grid g = bench_grid(state, false);
  const ScalarField f = random_band_limited(g, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(par::ordered_sum(f.size(), [&](std::size_t i) { return f[i] * f[i]; }));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

void serial_sum(benchmark::State& state) {
  const Grid g = bench_grid(state, false);
  const ScalarField f = random_band_limited(g, 3);
  for (auto _ : state) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * f[i];
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

}  // namespace

BENCHMARK_CAPTURE(stress, omp_2d, &kernels::stress_field, false)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(stress, serial_2d, &reference::stress_field, false)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(stress, omp_3d, &kernels::stress_field, true)->Arg(64);
BENCHMARK_CAPTURE(stress, serial_3d, &reference::stress_field, true)->Arg(64);

BENCHMARK_CAPTURE(scalar_kernel, dissipation_omp, &kernels::dissipation_field)->Arg(512);
BENCHMARK_CAPTURE(scalar_kernel, dissipation_serial, &reference::dissipation_field)->Arg(512);
BENCHMARK_CAPTURE(scalar_kernel, energy_omp, &kernels::viscous_energy_field)->Arg(512);
BENCHMARK_CAPTURE(scalar_kernel, energy_serial, &reference::viscous_energy_field)->Arg(512);

BENCHMARK_CAPTURE(flux, omp, &kernels::flux_field)->Arg(512);
BENCHMARK_CAPTURE(flux, serial, &reference::flux_field)->Arg(512);

BENCHMARK(ordered_sum)->Arg(512);
BENCHMARK(serial_sum)->Arg(512);

BENCHMARK_MAIN();
