#include "patchwork/extract.hpp"
#include "patchwork/field.hpp"
#include "patchwork/init.hpp"
#include "patchwork/mesh.hpp"
#include "patchwork/metrics.hpp"
#include "patchwork/train.hpp"

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include <random>
#include <vector>

using namespace patchwork;

namespace {

OrientedSampleSet sphere_samples(std::size_t m, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  return sample_mesh_surface(make_icosphere(0.8, 5), m, rng);
}

PointList uniform_points(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_off_surface(BBox::unit(3), 3, count, rng);
}

// Streaming evaluation of m points against a geometric-init model with 2n
// terms.
void BM_StreamingEval(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = geometric_init(sphere_samples(n));
  const PackedModel packed(model);
  const auto pts = uniform_points(4096, 2);
  std::vector<PointValue> out(pts.size());
  for (auto _ : state) {
    eval_field_batch_streaming(packed, pts, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(pts.size() * 2 * n));
  state.SetLabel("term-point pairs");
}
BENCHMARK(BM_StreamingEval)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

// One training step at desk scale: all losses, gradient and Adam update.
void BM_FitIteration(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto samples = sphere_samples(m);
  auto model = geometric_init(samples);
  const auto off = uniform_points(m, 3);
  AdamState adam(kParamStride * model.terms.size(), 0.9, 0.999, 1e-8);
  std::vector<double> grad;
  for (auto _ : state) {
    evaluate_losses(model, samples.points, samples.normals, off, LossToggles{}, &grad);
    adam_step(model, grad, adam, 1e-3);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FitIteration)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Chamfer(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  const auto a = uniform_points(count, 4);
  const auto b = uniform_points(count, 5);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(2 * count));
}
BENCHMARK(BM_Chamfer)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_GridSampling(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  const auto model = geometric_init(sphere_samples(1024));
  for (auto _ : state) {
    auto grid = sample_grid(model, res, BBox::unit(3, 1.05));
    benchmark::DoNotOptimize(grid.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(res) * res * res);
}
BENCHMARK(BM_GridSampling)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_MarchingCubes(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  const auto grid = sample_function(3, res, BBox::unit(3),
                                    [](const Vec3& x) { return x.norm() - 0.7; });
  for (auto _ : state) {
    auto mesh = marching_cubes(grid);
    benchmark::DoNotOptimize(mesh.triangles.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(res) * res * res);
}
BENCHMARK(BM_MarchingCubes)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_TropicalExtraction(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto model = digital_surface_grid(n, sphere_oracle(0.5));
  for (auto _ : state) {
    auto cx = extract_tropical(model);
    benchmark::DoNotOptimize(cx.facets.data());
  }
}
BENCHMARK(BM_TropicalExtraction)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  // Lattice models report tie degeneracies on every extraction.
  spdlog::set_level(spdlog::level::err);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
