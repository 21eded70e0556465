#include <benchmark/benchmark.h>

#include <cmath>

#include "wml/evolution.hpp"
#include "wml/norms.hpp"
#include "wml/spectral.hpp"

using namespace wml;

static void BM_EtaLeibniz(benchmark::State& state) {
  const WarpedTarget t(5, 0.03);
  double y = 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(t.eta(y += 1e-9, 3));
}
BENCHMARK(BM_EtaLeibniz);

static void BM_EtaSinePoly(benchmark::State& state) {
  const WarpedTarget t(5, 0.03);
  double y = 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(t.eta_poly().eval(y += 1e-9, 3));
}
BENCHMARK(BM_EtaSinePoly);

static void BM_EtaOverCube(benchmark::State& state) {
  const WarpedTarget t(5, 0.03);
  double y = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(t.eta_over_cube(y += 1e-9));
}
BENCHMARK(BM_EtaOverCube);

static void BM_SolveProfile(benchmark::State& state) {
  const WarpedTarget t(static_cast<int>(state.range(0)), 0.02);
  for (auto _ : state) benchmark::DoNotOptimize(solve_profile(t).b);
}
BENCHMARK(BM_SolveProfile)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_Collocation(benchmark::State& state) {
  const WarpedTarget t(3, 0.02);
  CollocationConfig cfg;
  cfg.N = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(newton_collocation(t, [](double r) { return 2 * std::atan(r); }, cfg).b);
}
BENCHMARK(BM_Collocation)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_Spectrum(benchmark::State& state) {
  const auto sol = solve_profile(WarpedTarget(3, 0.02));
  SpectralConfig cfg;
  cfg.N = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(analyze_spectrum(sol, cfg).gap);
}
BENCHMARK(BM_Spectrum)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_EvolutionStep(benchmark::State& state) {
  EvolutionConfig cfg;
  cfg.grid = static_cast<int>(state.range(0));
  const Evolver ev(solve_profile(WarpedTarget(3, 0.02)), cfg);
  auto s = ev.static_state();
  for (auto _ : state) benchmark::DoNotOptimize(ev.step(s, ev.dt()));
  state.SetItemsProcessed(state.iterations() * (cfg.grid + 1));
}
BENCHMARK(BM_EvolutionStep)->Arg(1024)->Arg(2048)->Unit(benchmark::kMicrosecond);

static void BM_Seminorm(benchmark::State& state) {
  std::vector<double> rho(1025);
  for (int i = 0; i <= 1024; ++i) rho[i] = 2.0 * i / 1024;
  const auto f = make_field(rho, [](double r) { return std::exp(-r * r); });
  const int j = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sobolev_seminorm(f, j, 5).value);
}
BENCHMARK(BM_Seminorm)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
