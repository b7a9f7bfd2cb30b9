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
#include "hfbri/lra.hpp"
#include "hfbri/point_cloud.hpp"
#include "hfbri/rihf.hpp"

namespace hfbri {
namespace {

void BM_ExtractFeatures(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cloud = normalize_unit_sphere(generate_synthetic(SyntheticShape::kCube, n, 2));
  const auto patches = patchify(cloud.points, static_cast<std::size_t>(state.range(1)),
                                static_cast<std::size_t>(state.range(2)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(cloud, patches));
}
BENCHMARK(BM_ExtractFeatures)->Args({512, 32, 16})->Args({2048, 256, 64})->Unit(benchmark::kMillisecond);

void BM_SymmetricEigen(benchmark::State& state) {
  const Matrix3 m{{{2.0, 0.3, -0.1}, {0.3, 1.0, 0.2}, {-0.1, 0.2, 0.5}}};
  for (auto _ : state) benchmark::DoNotOptimize(eigen_symmetric(m));
}
BENCHMARK(BM_SymmetricEigen);

}  // namespace
}  // namespace hfbri
