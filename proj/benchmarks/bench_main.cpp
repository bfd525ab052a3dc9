// Microbenchmarks for the numerically heavy kernels: the Laplace relaxation,
// the multi-start hyperbola fit, and the pair-ratio residual map.

#include <benchmark/benchmark.h>

#include <cmath>

#include "tlsmap/fields.hpp"
#include "tlsmap/geometry.hpp"
#include "tlsmap/localization.hpp"
#include "tlsmap/schedule.hpp"
#include "tlsmap/trace_fit.hpp"

namespace {

using namespace tlsmap;

CircuitLayout bench_layout() {
  ReferenceLayoutOptions opt;
  return make_reference_layout(opt);
}

void bm_solve_potential(benchmark::State& state) {
  CircuitLayout layout = bench_layout();
  double spacing = 100.0 / static_cast<double>(state.range(0));
  ConductorGrid grid = rasterize(layout, spacing);
  std::map<Conductor, double> voltages{{Conductor::ElectrodeAlpha, 1.0}};
  for (auto _ : state) {
    ScalarMap phi = solve_potential(grid, voltages);
    benchmark::DoNotOptimize(phi.values.data());
  }
  state.SetLabel(std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
}

void bm_fit_hyperbola(benchmark::State& state) {
  VoltageSchedule schedule = build_schedule(
      -20.0, 20.0, 1.0, 0.05,
      {Conductor::ElectrodeAlpha, Conductor::ElectrodeBeta,
       Conductor::ElectrodeGamma, Conductor::ElectrodeDelta});
  const double delta = 5.08, e0 = -0.4;
  const double g[4] = {0.02, 0.013, -0.008, 0.005};
  TraceData trace;
  long n = schedule.total_steps();
  for (long s = 0; s < n; s += 4) {
    std::vector<double> v = schedule.voltages_at(s);
    double u = e0;
    for (int k = 0; k < 4; ++k) u += g[k] * v[k];
    TracePoint p;
    p.step = s;
    p.frequency_ghz = std::hypot(delta, u);
    p.depth = 0.2;
    p.sigma_ghz = 2e-4;
    trace.points.push_back(p);
  }
  for (auto _ : state) {
    TraceFit fit = fit_hyperbola(trace, schedule);
    benchmark::DoNotOptimize(fit.chi2);
  }
  state.SetLabel(std::to_string(trace.points.size()) + " points");
}

void bm_residual_map(benchmark::State& state) {
  CircuitLayout layout = bench_layout();
  ConductorGrid grid = rasterize(layout, 1.0);
  std::map<Conductor, FieldMap> dc_maps;
  for (Conductor e : kElectrodes) dc_maps[e] = solve_field(grid, e);
  FieldMap e_rms = qubit_rms_field(grid, 84.0, 5.1);
  ScalarMap mask = detectable_mask(e_rms, 0.75);

  std::vector<std::pair<Conductor, double>> gammas;
  Point probe{40.0, 52.0};
  for (Conductor e : kElectrodes) {
    Vec2 f = sample_field(dc_maps[e], probe);
    gammas.emplace_back(e, std::hypot(f.x, f.y) * 1e-3);
  }
  for (auto _ : state) {
    ResidualMap rmap = residual_map_from_gammas(gammas, dc_maps, mask);
    benchmark::DoNotOptimize(rmap.sigma.data());
  }
  state.SetLabel(std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
}

}  // namespace

BENCHMARK(bm_solve_potential)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_fit_hyperbola)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_residual_map)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
