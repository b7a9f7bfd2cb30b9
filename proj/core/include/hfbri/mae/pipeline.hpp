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

// Glue between the geometry side (double precision, per cloud) and the model
// side (batched tensors).

#include <cstdint>
#include <span>
#include <vector>

#include "hfbri/geom.hpp"
#include "hfbri/mae/model.hpp"
#include "hfbri/point_cloud.hpp"
#include "hfbri/rihf.hpp"

namespace hfbri::mae {

// One cloud after rotation, patchify and feature extraction.
struct PreparedCloud {
  std::size_t n_patches = 0;
  std::size_t points_per_patch = 0;
  std::vector<double> rilf;     // n_patches x K x 8
  std::vector<double> rigf;     // n_patches x 5
  std::vector<double> targets;  // n_patches x K x 3, aligned coordinates of patch members
  PatchSet patches;             // computed on the rotated input
  std::vector<Vec3> points;     // rotated input
  std::vector<int> part_labels;
  int label = -1;
  double min_margin = 0.0;
};

// Applies `rotation` to the aligned cloud, patchifies the rotated copy (FPS
// start index 0), extracts features, and records the aligned coordinates of
// every patch member as reconstruction targets.
PreparedCloud prepare_cloud(const PointCloud& aligned, const Rotation& rotation,
                            const ModelConfig& config, const FeatureOptions& options = {});

// Exactly masked_count(n_patches, ratio) entries set, chosen uniformly
// without replacement.
std::vector<bool> sample_mask(std::size_t n_patches, double ratio, std::uint64_t seed);

// Batched feature tensors. When `patch_subset` is given, only those patch
// rows are taken (per cloud, ascending).
template <typename T>
adiff::Tensor<T> rilf_tensor(std::span<const PreparedCloud* const> clouds,
                             const std::vector<std::vector<std::size_t>>* patch_subset = nullptr);
template <typename T>
adiff::Tensor<T> rigf_tensor(std::span<const PreparedCloud* const> clouds);

// Indices of visible (false) or masked (true) patches, ascending.
std::vector<std::size_t> mask_indices(const std::vector<bool>& mask, bool masked);

// Mean Chamfer loss over all masked patches of the batch.
template <typename T>
adiff::Tensor<T> pretrain_loss(MaskedAutoencoder<T>& model, std::span<const PreparedCloud* const> clouds,
                               const std::vector<std::vector<bool>>& masks, bool train);

// Full (unmasked) encoding, as used by heads and probes.
template <typename T>
Encoding<T> encode_clouds(MaskedAutoencoder<T>& model, std::span<const PreparedCloud* const> clouds,
                          bool train);

// Max over patches plus mean over patches: [B, N, D] -> [B, D].
template <typename T>
adiff::Tensor<T> global_feature(const adiff::Tensor<T>& tokens);

// Every block output averaged over patches, concatenated: [B, blocks * D].
template <typename T>
adiff::Tensor<T> block_concat_feature(const Encoding<T>& encoding);

}  // namespace hfbri::mae
