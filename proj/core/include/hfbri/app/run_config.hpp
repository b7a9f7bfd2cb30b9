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

// JSON run configuration shared by every CLI command. Unknown keys anywhere
// in the document are a ConfigError.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hfbri/geom.hpp"
#include "hfbri/mae/config.hpp"
#include "hfbri/point_cloud.hpp"
#include "hfbri/rihf.hpp"

namespace hfbri::app {

enum class DataKind { kSynthetic, kDirectory };

struct DataConfig {
  DataKind kind = DataKind::kSynthetic;
  // Synthetic: classes in label order, clouds per class per split.
  std::vector<SyntheticShape> shapes{SyntheticShape::kSphere, SyntheticShape::kCube,
                                     SyntheticShape::kCylinder, SyntheticShape::kTorus};
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 50;
  std::size_t points = 512;
  // Directory: <path>/{train,test}/<class>/<cloud files>.
  std::filesystem::path path;
  std::optional<CloudFormat> format;
};

// Which frozen representation the probe consumes.
enum class ProbeFeature { kPooled, kBlockConcat };

struct ProbeConfig {
  std::size_t epochs = 200;
  double lr = 1e-2;
  double l2 = 1e-3;
  ProbeFeature feature = ProbeFeature::kPooled;
  std::vector<RotationSetting> train_settings{RotationSetting::kAligned, RotationSetting::kZ,
                                              RotationSetting::kRandom};
  std::vector<RotationSetting> test_settings{RotationSetting::kAligned, RotationSetting::kZ,
                                             RotationSetting::kRandom};
};

struct FewShotConfig {
  std::size_t ways = 4;
  std::size_t shots = 10;
  std::size_t queries = 10;
  std::size_t episodes = 10;
  RotationSetting setting = RotationSetting::kRandom;
};

enum class FinetuneTask { kClassification, kSegmentation };

struct FinetuneConfig {
  FinetuneTask task = FinetuneTask::kClassification;
  bool head_only = false;
  std::size_t epochs = 50;
  double lr = 5e-4;
  RotationSetting test_rotation = RotationSetting::kRandom;
};

struct AblateConfig {
  std::vector<double> mask_ratios{0.3, 0.5, 0.6, 0.8};
  std::vector<std::vector<RilfGroup>> rilf_groups{
      {RilfGroup::kDistance},
      {RilfGroup::kReferenceAngles},
      {RilfGroup::kNeighborAngles},
      {RilfGroup::kDistance, RilfGroup::kReferenceAngles, RilfGroup::kNeighborAngles}};
  std::size_t epochs = 0;  // 0 = the top-level epochs
  RotationSetting probe_train = RotationSetting::kRandom;
  RotationSetting probe_test = RotationSetting::kRandom;
};

struct ExtractConfig {
  std::size_t max_clouds = 4;
};

struct RunConfig {
  mae::ModelConfig model;
  bool model_given = false;
  DataConfig data;
  RotationSetting train_rotation = RotationSetting::kAligned;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double weight_decay = 0.05;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output = "out";
  std::size_t checkpoint_every = 10;
  FeatureOptions features;
  ProbeConfig probe;
  FewShotConfig fewshot;
  FinetuneConfig finetune;
  AblateConfig ablate;
  ExtractConfig extract;

  // Canonical JSON of every resolved field except the output directory.
  std::string canonical_json() const;
  // FNV-1a 64 of canonical_json(), 16 hex digits.
  std::string hash() const;
  std::uint64_t require_seed() const;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

std::string_view task_name(FinetuneTask task);

}  // namespace hfbri::app
