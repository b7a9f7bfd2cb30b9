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

// Training and evaluation loops behind the CLI commands. Every loop is a
// pure function of (config, dataset, seed); worker threads only run
// index-addressed feature extraction, so results do not depend on the
// thread count.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hfbri/app/dataset.hpp"
#include "hfbri/app/run_config.hpp"
#include "hfbri/mae/checkpoint.hpp"
#include "hfbri/mae/model.hpp"
#include "hfbri/mae/pipeline.hpp"
#include "hfbri/probe.hpp"

namespace hfbri::app {

// Runs fn(i) for i in [0, n) on up to `threads` workers (inline when 1).
// The first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// Rotates cloud i by sample_rotation(setting, derive_seed(seed, {i})) and
// prepares it.
std::vector<mae::PreparedCloud> prepare_clouds(std::span<const PointCloud> clouds, RotationSetting setting,
                                               std::uint64_t seed, const mae::ModelConfig& model,
                                               const FeatureOptions& features, std::size_t threads);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
};

using Model = mae::MaskedAutoencoder<float>;
using EpochCallback = std::function<void(const EpochStats&, Model&)>;

struct PretrainResult {
  std::vector<EpochStats> epochs;
  mae::Checkpoint checkpoint;
};

// Masked reconstruction pretraining with AdamW and the cosine schedule.
// Throws NumericError with the step index on a non-finite loss.
PretrainResult pretrain(const RunConfig& config, const Dataset& data, std::size_t threads,
                        const EpochCallback& on_epoch = {});

// Freshly initialized model for the config's seed (what pretraining starts
// from; also the random-weight baseline).
Model initial_model(const RunConfig& config);
Model model_from_checkpoint(const mae::Checkpoint& ckpt);
mae::Checkpoint model_checkpoint(Model& model, std::uint64_t step);

// Frozen features in eval mode, one row per prepared cloud.
probe::FeatureMatrix frozen_features(Model& model, const std::vector<mae::PreparedCloud>& prepared,
                                     ProbeFeature kind);

std::vector<probe::GridCell> run_grid(const RunConfig& config, Model& model, const Dataset& data,
                                      std::size_t threads);

struct FewShotResult {
  std::vector<double> accuracies;  // one per episode
  double mean = 0.0;
  double stddev = 0.0;
};

FewShotResult run_fewshot(const RunConfig& config, Model& model, const Dataset& data, std::size_t threads);

struct FinetuneEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;  // classification accuracy or point accuracy
  double lr = 0.0;
};

struct FinetuneResult {
  std::vector<FinetuneEpoch> epochs;
  mae::Checkpoint checkpoint;  // encoder + head
};

// Attaches the configured head to the encoder (initialized from `init` when
// given) and trains with the mask disabled. Head-only runs keep encoder
// parameters and statistics untouched.
FinetuneResult finetune(const RunConfig& config, const Dataset& data, const mae::Checkpoint* init,
                        std::size_t threads);

struct AblationRow {
  std::string sweep;   // "mask_ratio" or "rilf_drop"
  std::string value;   // ratio, or '+'-joined group names ("none" for the full set)
  double accuracy = 0.0;
  double final_loss = 0.0;
  std::size_t n_test = 0;
};

AblationRow probe_row(const RunConfig& config, Model& model, const Dataset& data, std::size_t threads);

std::vector<AblationRow> run_ablation(const RunConfig& config, const Dataset& data, std::size_t threads);

}  // namespace hfbri::app
