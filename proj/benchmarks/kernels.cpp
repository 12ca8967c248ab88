#include <benchmark/benchmark.h>

#include <numeric>

#include "l2g/geometry.hpp"
#include "l2g/synthetic.hpp"
#include "l2g/training.hpp"

namespace {

l2g::PointCloud sphere(std::size_t n) { return l2g::make_shape(l2g::ShapeKind::Sphere, n, 1); }

void BM_FarthestPointSample(benchmark::State& state) {
  const auto cloud = sphere(std::size_t(state.range(0)));
  const auto m = std::size_t(state.range(0)) / 4;
  for (auto _ : state) benchmark::DoNotOptimize(l2g::farthest_point_sample(cloud, m, 0));
}
BENCHMARK(BM_FarthestPointSample)->Arg(256)->Arg(1024)->Arg(4096);

void knn(benchmark::State& state, l2g::KnnMethod method) {
  const auto n = std::size_t(state.range(0));
  const auto cloud = sphere(n);
  const auto centroids = l2g::farthest_point_sample(cloud, n / 4, 0);
  const std::vector<std::size_t> scales{16, 32, 64, 128};
  for (auto _ : state) benchmark::DoNotOptimize(l2g::knn_group(cloud, centroids, scales, method));
}
void BM_KnnBrute(benchmark::State& state) { knn(state, l2g::KnnMethod::BruteForce); }
void BM_KnnGrid(benchmark::State& state) { knn(state, l2g::KnnMethod::Grid); }
BENCHMARK(BM_KnnBrute)->Arg(1024)->Arg(4096);
BENCHMARK(BM_KnnGrid)->Arg(1024)->Arg(4096);

void BM_Chamfer(benchmark::State& state) {
  const auto a = sphere(std::size_t(state.range(0)));
  const auto b = l2g::make_shape(l2g::ShapeKind::Box, std::size_t(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(l2g::chamfer_distance(a, b));
}
BENCHMARK(BM_Chamfer)->Arg(256)->Arg(1024);

void forward_backward(benchmark::State& state, const l2g::ModelConfig& cfg) {
  const l2g::Model model(cfg, 0);
  const auto sample = l2g::prepare(sphere(cfg.num_points), cfg);
  auto grads = model.params().zeros_like();
  for (auto _ : state) benchmark::DoNotOptimize(l2g::sample_gradient_into(model, sample, {}, grads));
}
void BM_ForwardBackwardToy(benchmark::State& state) { forward_backward(state, l2g::ModelConfig::toy()); }
void BM_ForwardBackwardDesk(benchmark::State& state) { forward_backward(state, l2g::ModelConfig::desk()); }
BENCHMARK(BM_ForwardBackwardToy)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardBackwardDesk)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
