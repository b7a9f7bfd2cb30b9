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
#pragma once

// Frozen-feature evaluation: a multi-class hinge (Crammer-Singer) linear
// classifier, few-shot episode sampling and the X/Y rotation grid.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hfbri/geom.hpp"

namespace hfbri::probe {

using FeatureMatrix = std::vector<std::vector<double>>;

struct ProbeOptions {
  std::size_t epochs = 200;
  double lr = 1e-2;
  double l2 = 1e-3;
  std::uint64_t seed = 0;
};

class LinearProbe {
 public:
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // classes x dim
  std::vector<double> bias;
  // Standardization applied to raw features before scoring.
  std::vector<double> mean;
  std::vector<double> inv_std;
  // Objective after each epoch (index 0 is the initial objective).
  std::vector<double> objective;

  std::vector<double> scores(std::span<const double> feature) const;
  int predict(std::span<const double> feature) const;
  // Gap between the best and second-best score.
  double margin(std::span<const double> feature) const;
};

// Minimizes mean Crammer-Singer hinge loss + l2/2 |W|^2 by full-batch
// subgradient descent. A step that would raise the objective is retried at
// half the step size, so the recorded objective never increases. Throws
// DataError when some class in [0, num_classes) has no example.
LinearProbe train_probe(const FeatureMatrix& features, std::span<const int> labels,
                        std::size_t num_classes, const ProbeOptions& options);

double accuracy(const LinearProbe& probe, const FeatureMatrix& features, std::span<const int> labels);

struct Episode {
  std::vector<int> classes;           // sampled class ids, episode order
  std::vector<std::size_t> support;   // dataset indices
  std::vector<std::size_t> query;
  std::vector<int> support_labels;    // remapped to 0..ways-1
  std::vector<int> query_labels;
};

// Samples `ways` distinct classes, then `shots` support and `queries` query
// examples per class without overlap. Throws DataError naming the first
// sampled class that lacks shots + queries examples.
Episode few_shot_episode(std::span<const int> labels, std::size_t ways, std::size_t shots,
                         std::size_t queries, std::uint64_t seed);

struct GridCell {
  RotationSetting train;
  RotationSetting test;
  double accuracy = 0.0;
  std::size_t n_test = 0;
};

// Frozen features of the train (true) or test (false) split under a setting.
using FeatureFn = std::function<FeatureMatrix(bool train_split, RotationSetting setting)>;

// One probe per train setting, evaluated under every test setting.
std::vector<GridCell> evaluate_grid(const FeatureFn& features, std::span<const int> train_labels,
                                    std::span<const int> test_labels, std::size_t num_classes,
                                    std::span<const RotationSetting> train_settings,
                                    std::span<const RotationSetting> test_settings,
                                    const ProbeOptions& options);

void write_grid_csv(std::ostream& out, std::span<const GridCell> cells, std::uint64_t seed,
                    const std::string& config_hash);

}  // namespace hfbri::probe
