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
#include "hfbri/app/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "hfbri/error.hpp"
#include "hfbri/rng.hpp"

namespace hfbri::app {
namespace {

namespace fs = std::filesystem;

std::vector<PointCloud> synthetic_split(const DataConfig& config, std::uint64_t seed, std::uint64_t split,
                                        std::size_t per_class) {
  std::vector<PointCloud> out;
  out.reserve(per_class * config.shapes.size());
  for (std::size_t c = 0; c < config.shapes.size(); ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      auto cloud = generate_synthetic(config.shapes[c], config.points, derive_seed(seed, {split, c, i}));
      cloud = normalize_unit_sphere(cloud);
      cloud.label = static_cast<int>(c);
      out.push_back(std::move(cloud));
    }
  }
  return out;
}

std::vector<PointCloud> directory_split(const DataConfig& config, const fs::path& split_dir,
                                        const std::vector<std::string>& classes) {
  std::vector<PointCloud> out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const fs::path dir = split_dir / classes[c];
    if (!fs::is_directory(dir)) throw DataError("missing class directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("class '" + classes[c] + "' has no clouds in " + dir.string());
    for (const auto& f : files) {
      auto cloud = config.format ? load_point_cloud(f, *config.format) : load_point_cloud(f);
      cloud = normalize_unit_sphere(cloud);
      cloud.label = static_cast<int>(c);
      out.push_back(std::move(cloud));
    }
  }
  return out;
}

}  // namespace

std::vector<int> Dataset::labels_of(const std::vector<PointCloud>& clouds) {
  std::vector<int> out;
  out.reserve(clouds.size());
  for (const auto& c : clouds) out.push_back(c.label.value_or(-1));
  return out;
}

Dataset load_dataset(const DataConfig& config, std::uint64_t seed) {
  Dataset ds;
  if (config.kind == DataKind::kSynthetic) {
    for (auto s : config.shapes) ds.class_names.emplace_back(shape_name(s));
    ds.train = synthetic_split(config, seed, 0, config.train_per_class);
    ds.test = synthetic_split(config, seed, 1, config.test_per_class);
    return ds;
  }
  const fs::path train_dir = config.path / "train";
  const fs::path test_dir = config.path / "test";
  if (!fs::is_directory(train_dir)) throw DataError("missing training directory: " + train_dir.string());
  for (const auto& e : fs::directory_iterator(train_dir)) {
    if (e.is_directory()) ds.class_names.push_back(e.path().filename().string());
  }
  std::sort(ds.class_names.begin(), ds.class_names.end());
  if (ds.class_names.empty()) throw DataError("no class directories under " + train_dir.string());
  ds.train = directory_split(config, train_dir, ds.class_names);
  ds.test = fs::is_directory(test_dir) ? directory_split(config, test_dir, ds.class_names) : std::vector<PointCloud>{};
  return ds;
}

}  // namespace hfbri::app
