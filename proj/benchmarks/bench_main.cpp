#include <benchmark/benchmark.h>

#include "support/fixtures.hpp"
#include "vesselmark/dir_eval.hpp"
#include "vesselmark/filters.hpp"
#include "vesselmark/sphere_growing.hpp"

using namespace vmtest;

namespace {

// Thick-slice CT-like block resampled to the refinement spacing.
void BM_ResampleIsotropic(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ScalarVolume vol(VolumeGeometry({n, n, n / 2}, {0.8, 0.8, 2.5}, {0, 0, 0}));
  Rng rng(1);
  for (auto& v : vol.values()) v = static_cast<float>(rng.uniform(-100, 300));
  for (auto _ : state) benchmark::DoNotOptimize(resample_isotropic(vol, 0.7));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(vol.size()));
}
BENCHMARK(BM_ResampleIsotropic)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);

void BM_GaussianSmooth(benchmark::State& state) {
  const YFixture f = make_y_fixture(3, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_smooth(f.image, 1.0));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.image.size()));
}
BENCHMARK(BM_GaussianSmooth)->Arg(57)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_Frangi(benchmark::State& state) {
  const YFixture f = make_y_fixture(3, 57);
  const VesselnessParams params;
  for (auto _ : state) benchmark::DoNotOptimize(frangi_vesselness(f.image, params));
}
BENCHMARK(BM_Frangi)->Unit(benchmark::kMillisecond);

// One full refinement: crop, window, gradient, 30 growth steps.
void BM_RefineBifurcation(benchmark::State& state) {
  const YFixture f = make_y_fixture(5, 57);
  const GrowConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(refine_bifurcation(f.image, f.seed, cfg));
}
BENCHMARK(BM_RefineBifurcation)->Unit(benchmark::kMillisecond);

void BM_ComputeTre(benchmark::State& state) {
  const VolumeGeometry g = cube_grid(64, 1.5, {-48, -48, -48});
  VectorField dvf(g);
  Rng rng(2);
  for (auto& v : dvf.values()) v = Vec3{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
  std::vector<LandmarkPair> pairs;
  for (int n = 0; n < state.range(0); ++n) {
    const PointMm p{rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(-40, 40)};
    pairs.push_back({n + 1, p, p});
  }
  for (auto _ : state) benchmark::DoNotOptimize(compute_tre(pairs, dvf));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeTre)->Arg(100)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
