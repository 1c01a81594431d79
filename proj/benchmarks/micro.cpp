#include <memory>

#include <benchmark/benchmark.h>

#include "riskregion/evalbench.hpp"
#include "riskregion/region.hpp"
#include "riskregion/spectral.hpp"
#include "riskregion/tailfit.hpp"
#include "riskregion/testbed.hpp"

using namespace riskregion;

namespace {

const Sample& cauchy_sample() {
  static const Sample s = model(ModelKind::cauchy2).sample(5000, 1);
  return s;
}

std::shared_ptr<const SphereGrid> grid2() {
  static const auto g = std::make_shared<const SphereGrid>(SphereGrid::standard(2));
  return g;
}

void BM_PsiHatOnGrid(benchmark::State& state) {
  const auto est = fit_spectral(cauchy_sample(), static_cast<std::size_t>(state.range(0)), 0.4, Kernel::linear());
  for (auto _ : state) benchmark::DoNotOptimize(est.psi_on(*grid2()));
}
BENCHMARK(BM_PsiHatOnGrid)->Arg(100)->Arg(400)->Arg(1000);

void BM_NuScan(benchmark::State& state) {
  const auto ks = default_rank_grid(cauchy_sample().size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(scan_nu_s(cauchy_sample(), 1.0, 0.4, Kernel::linear(), ks, *grid2()));
  }
}
BENCHMARK(BM_NuScan)->Unit(benchmark::kMillisecond);

void BM_LevelSetProbability(benchmark::State& state) {
  const Model& m = model(static_cast<ModelKind>(state.range(0)));
  const auto g = SphereGrid::standard(m.dim());
  for (auto _ : state) benchmark::DoNotOptimize(level_set_probability(m, 1e-9, g));
}
BENCHMARK(BM_LevelSetProbability)
    ->Arg(static_cast<int>(ModelKind::cauchy2))
    ->Arg(static_cast<int>(ModelKind::clover))
    ->Arg(static_cast<int>(ModelKind::cauchy3))
    ->Unit(benchmark::kMillisecond);

void BM_MveFit(benchmark::State& state) {
  const MveOptions opt{static_cast<std::size_t>(state.range(0)), 1};
  for (auto _ : state) benchmark::DoNotOptimize(mve_fit(cauchy_sample(), opt));
}
BENCHMARK(BM_MveFit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_FitRegion(benchmark::State& state) {
  const FitParams fp{.k_alpha = 200, .k_u = 150, .k_psi = 300};
  for (auto _ : state) benchmark::DoNotOptimize(fit_region(cauchy_sample(), fp, grid2()));
}
BENCHMARK(BM_FitRegion)->Unit(benchmark::kMillisecond);

void BM_SelectParameters(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(select_parameters(cauchy_sample(), AutoOptions{}, *grid2()));
}
BENCHMARK(BM_SelectParameters)->Unit(benchmark::kMillisecond);

void BM_SymmDiff(benchmark::State& state) {
  const Model& m = model(ModelKind::cauchy2);
  const auto truth = true_region(m, 1e-4, grid2());
  const FitParams fp{.k_alpha = 200, .k_u = 150, .k_psi = 300};
  const StarRegion est = fit_region(cauchy_sample(), fp, grid2()).region(1e-4);
  for (auto _ : state) benchmark::DoNotOptimize(relative_error(truth, est, *grid2()));
}
BENCHMARK(BM_SymmDiff)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
