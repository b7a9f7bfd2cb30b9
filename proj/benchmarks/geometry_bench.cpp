// Copyright 2026 The hfbri Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include "benchmark/benchmark.h"
#include "hfbri/geom.hpp"
#include "hfbri/point_cloud.hpp"

namespace hfbri {
namespace {

PointCloud bench_cloud(std::size_t n) {
  return normalize_unit_sphere(generate_synthetic(SyntheticShape::kTorus, n, 1));
}

void BM_FarthestPointSample(benchmark::State& state) {
  const auto cloud = bench_cloud(static_cast<std::size_t>(state.range(0)));
  const auto m = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(farthest_point_sample(cloud.points, m));
}
BENCHMARK(BM_FarthestPointSample)->Args({512, 32})->Args({2048, 256});

void BM_Knn(benchmark::State& state) {
  const auto cloud = bench_cloud(static_cast<std::size_t>(state.range(0)));
  const auto k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(knn(cloud.points, 0, k));
}
BENCHMARK(BM_Knn)->Args({512, 16})->Args({2048, 64});

void BM_Patchify(benchmark::State& state) {
  const auto cloud = bench_cloud(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(patchify(cloud.points, static_cast<std::size_t>(state.range(1)),
                                      static_cast<std::size_t>(state.range(2))));
  }
}
BENCHMARK(BM_Patchify)->Args({512, 32, 16})->Args({2048, 256, 64})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hfbri
