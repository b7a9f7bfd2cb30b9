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

#include <cstdint>
#include <string>
#include <vector>

#include "hfbri/app/run_config.hpp"
#include "hfbri/point_cloud.hpp"

namespace hfbri::app {

// Clouds are stored aligned (canonical pose) and normalized to the unit
// sphere; labels index class_names.
struct Dataset {
  std::vector<PointCloud> train;
  std::vector<PointCloud> test;
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }
  static std::vector<int> labels_of(const std::vector<PointCloud>& clouds);
};

// Synthetic splits are seed-partitioned: cloud i of class c in split s is
// generated from derive_seed(seed, {s, c, i}). Directory data reads
// <path>/train/<class>/* and <path>/test/<class>/*, classes sorted by name.
Dataset load_dataset(const DataConfig& config, std::uint64_t seed);

}  // namespace hfbri::app
