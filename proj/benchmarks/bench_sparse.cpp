#include <benchmark/benchmark.h>

#include <random>

#include "minkunext/kernel_map.hpp"
#include "minkunext/nn/conv.hpp"
#include "minkunext/train/synthetic.hpp"
#include "minkunext/voxel.hpp"

using namespace minkunext;

namespace {

PointCloud scene(int points) {
  std::mt19937_64 rng(1);
  return generate_synthetic(1, 1, points, rng).records.front().cloud;
}

CoordinateMapPtr voxels(int points, double qs) { return build_coordinate_map(quantize_coords(scene(points), qs, 0)); }

}  // namespace

static void BM_Quantize(benchmark::State& state) {
  const auto cloud = scene(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quantize_coords(cloud, 0.01, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Quantize)->Arg(4096)->Arg(32768);

static void BM_KernelMap(benchmark::State& state) {
  const auto map = voxels(4096, 0.01);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_kernel_map(*map, *map, k, false));
  state.counters["voxels"] = static_cast<double>(map->size());
}
BENCHMARK(BM_KernelMap)->Arg(1)->Arg(3)->Arg(5);

static void BM_ConvForward(benchmark::State& state) {
  const auto map = voxels(16384, 0.01);
  const auto km = build_kernel_map(*map, *map, 3, false);
  const auto c = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-1, 1);
  Matrix<float> x(map->size(), c), w(27 * c, c);
  for (auto& v : x.flat()) v = u(rng);
  for (auto& v : w.flat()) v = u(rng);
  std::size_t pairs = 0;
  for (const auto& o : km->offsets) pairs += o.size();
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv_forward(x, w, Matrix<float>{}, *km));
  state.counters["GFLOPS"] = benchmark::Counter(static_cast<double>(2 * pairs * c * c) * 1e-9,
                                                benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ConvForward)->Arg(8)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_ConvBackward(benchmark::State& state) {
  const auto map = voxels(16384, 0.01);
  const auto km = build_kernel_map(*map, *map, 3, false);
  const auto c = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1, 1);
  Matrix<float> x(map->size(), c), w(27 * c, c), g(map->size(), c);
  for (auto* m : {&x, &w, &g})
    for (auto& v : m->flat()) v = u(rng);
  Matrix<float> gx(x.rows(), c), gw(w.rows(), c);
  for (auto _ : state) nn::conv_backward<float>(x, w, *km, g, &gx, &gw, nullptr);
}
BENCHMARK(BM_ConvBackward)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
