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
#include <span>
#include <vector>

#include "hfbri/adiff/nn.hpp"
#include "hfbri/mae/config.hpp"
#include "hfbri/vec3.hpp"

namespace hfbri::mae {

inline constexpr double kHeadDropout = 0.1;

// MLP over the concatenated block features. Hidden stages are
// affine -> dropout -> relu -> batch norm; the last affine emits logits.
template <typename T>
class ClassificationHead {
 public:
  ClassificationHead(const ModelConfig& config, std::uint64_t seed);

  // x [B, blocks * D] -> logits [B, cls_dim].
  adiff::Tensor<T> operator()(const adiff::Tensor<T>& x, bool train, Rng& dropout_rng);
  adiff::ParameterSet<T> parameters();

 private:
  std::vector<adiff::Linear<T>> fcs_;
  std::vector<adiff::BatchNorm<T>> bns_;
  adiff::Linear<T> out_;
};

// Per point, the indices of its `neighbors` nearest patch centers (ties by
// patch index); flattened [P x neighbors].
std::vector<std::size_t> assign_points_to_patches(std::span<const Vec3> points,
                                                  std::span<const Vec3> centers,
                                                  std::size_t neighbors);

inline constexpr std::size_t kSegNeighborPatches = 3;

// Widens tokens D -> 3D with an affine map and one transformer block, then
// builds for each point the max- and mean-pool of the widened tokens of its
// nearest patches, concatenated with a 64-wide class-label stream
// (2 * 3D + 64 channels), and runs a pointwise stack
// (affine -> batch norm -> relu -> dropout per hidden stage) to logits.
template <typename T>
class SegmentationHead {
 public:
  SegmentationHead(const ModelConfig& config, std::uint64_t seed);

  // tokens [B, N, D]; labels one-hot [B, cls_dim]; assignment holds
  // points_per_cloud x kSegNeighborPatches patch indices per cloud.
  // Returns [B, points_per_cloud, seg_dim].
  adiff::Tensor<T> operator()(const adiff::Tensor<T>& tokens, const adiff::Tensor<T>& labels,
                              const std::vector<std::vector<std::size_t>>& assignment,
                              std::size_t points_per_cloud, bool train, Rng& dropout_rng);

  // The concatenated per-point features before the pointwise stack
  // [B * P, 6D + 64], exposed for shape checks.
  adiff::Tensor<T> concat_features(const adiff::Tensor<T>& tokens, const adiff::Tensor<T>& labels,
                                   const std::vector<std::vector<std::size_t>>& assignment,
                                   std::size_t points_per_cloud);

  adiff::ParameterSet<T> parameters();

 private:
  ModelConfig config_;
  adiff::Linear<T> widen_;
  adiff::TransformerBlock<T> block_;
  adiff::Linear<T> label_fc_;
  std::vector<adiff::Linear<T>> fcs_;
  std::vector<adiff::BatchNorm<T>> bns_;
  adiff::Linear<T> out_;
};

extern template class ClassificationHead<float>;
extern template class ClassificationHead<double>;
extern template class SegmentationHead<float>;
extern template class SegmentationHead<double>;

}  // namespace hfbri::mae
