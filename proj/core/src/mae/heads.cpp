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
#include "hfbri/mae/heads.hpp"

#include <string>

#include "hfbri/error.hpp"
#include "hfbri/geom.hpp"

namespace hfbri::mae {

using adiff::Shape;
using adiff::Tensor;

template <typename T>
ClassificationHead<T>::ClassificationHead(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x636c73ULL}));
  std::size_t width = config.cls_input_dim();
  for (std::size_t h : config.head_hidden()) {
    fcs_.emplace_back(width, h, rng);
    bns_.emplace_back(h);
    width = h;
  }
  out_ = adiff::Linear<T>(width, config.cls_dim, rng);
}

template <typename T>
Tensor<T> ClassificationHead<T>::operator()(const Tensor<T>& x, bool train, Rng& dropout_rng) {
  auto h = x;
  for (std::size_t i = 0; i < fcs_.size(); ++i) {
    h = adiff::dropout(fcs_[i](h), static_cast<T>(kHeadDropout), train, dropout_rng);
    h = bns_[i](adiff::relu(h), train);
  }
  return out_(h);
}

template <typename T>
adiff::ParameterSet<T> ClassificationHead<T>::parameters() {
  adiff::ParameterSet<T> set;
  for (std::size_t i = 0; i < fcs_.size(); ++i) {
    fcs_[i].collect("cls_head.fc" + std::to_string(i + 1), set);
    bns_[i].collect("cls_head.bn" + std::to_string(i + 1), set);
  }
  out_.collect("cls_head.out", set);
  return set;
}

std::vector<std::size_t> assign_points_to_patches(std::span<const Vec3> points,
                                                  std::span<const Vec3> centers,
                                                  std::size_t neighbors) {
  if (centers.empty()) throw SizeError("assign_points_to_patches: no patch centers");
  const std::size_t s = std::min(neighbors, centers.size());
  std::vector<std::size_t> out;
  out.reserve(points.size() * neighbors);
  for (const auto& p : points) {
    const auto nearest = knn_of(centers, p, s);
    out.insert(out.end(), nearest.begin(), nearest.end());
    // Fewer centers than requested neighbors: repeat the nearest.
    for (std::size_t i = s; i < neighbors; ++i) out.push_back(nearest[0]);
  }
  return out;
}

template <typename T>
SegmentationHead<T>::SegmentationHead(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng(derive_seed(seed, {0x736567ULL}));
  const std::size_t d = config.embed_dim;
  widen_ = adiff::Linear<T>(d, 3 * d, rng);
  block_ = adiff::TransformerBlock<T>(3 * d, config.heads, rng);
  label_fc_ = adiff::Linear<T>(config.cls_dim, ModelConfig::kSegLabelWidth, rng);
  std::size_t width = config.seg_concat_dim();
  for (std::size_t h : config.head_hidden()) {
    fcs_.emplace_back(width, h, rng);
    bns_.emplace_back(h);
    width = h;
  }
  out_ = adiff::Linear<T>(width, config.seg_dim, rng);
}

template <typename T>
Tensor<T> SegmentationHead<T>::concat_features(const Tensor<T>& tokens, const Tensor<T>& labels,
                                               const std::vector<std::vector<std::size_t>>& assignment,
                                               std::size_t points_per_cloud) {
  const std::size_t d = config_.embed_dim;
  if (tokens.rank() != 3 || tokens.dim(2) != d) {
    throw ShapeError("segment: tokens " + adiff::to_string(tokens.shape()));
  }
  const std::size_t batch = tokens.dim(0), n = tokens.dim(1);
  if (labels.shape() != Shape{batch, config_.cls_dim}) {
    throw ShapeError("segment: labels " + adiff::to_string(labels.shape()) + " vs tokens " +
                     adiff::to_string(tokens.shape()));
  }
  if (assignment.size() != batch) throw ShapeError("segment: one assignment per cloud required");
  const std::size_t s = kSegNeighborPatches;
  auto wide = block_(widen_(tokens));  // [B, N, 3D]
  std::vector<std::size_t> rows;
  rows.reserve(batch * points_per_cloud * s);
  for (std::size_t b = 0; b < batch; ++b) {
    if (assignment[b].size() != points_per_cloud * s) throw ShapeError("segment: assignment length mismatch");
    for (std::size_t idx : assignment[b]) {
      if (idx >= n) throw ShapeError("segment: patch index out of range");
      rows.push_back(b * n + idx);
    }
  }
  auto gathered = adiff::reshape(
      adiff::gather_rows(adiff::reshape(wide, Shape{batch * n, 3 * d}), std::span<const std::size_t>(rows)),
      Shape{batch * points_per_cloud, s, 3 * d});
  auto local_max = adiff::max_over_axis(gathered, 1);
  auto local_mean = adiff::mean_over_axis(gathered, 1);
  std::vector<std::size_t> owner(batch * points_per_cloud);
  for (std::size_t i = 0; i < owner.size(); ++i) owner[i] = i / points_per_cloud;
  auto label_stream = adiff::gather_rows(label_fc_(labels), std::span<const std::size_t>(owner));
  const std::vector<Tensor<T>> parts{local_max, local_mean, label_stream};
  return adiff::concat(std::span<const Tensor<T>>(parts), 1);
}

template <typename T>
Tensor<T> SegmentationHead<T>::operator()(const Tensor<T>& tokens, const Tensor<T>& labels,
                                          const std::vector<std::vector<std::size_t>>& assignment,
                                          std::size_t points_per_cloud, bool train, Rng& dropout_rng) {
  auto h = concat_features(tokens, labels, assignment, points_per_cloud);
  for (std::size_t i = 0; i < fcs_.size(); ++i) {
    h = adiff::relu(bns_[i](fcs_[i](h), train));
    h = adiff::dropout(h, static_cast<T>(kHeadDropout), train, dropout_rng);
  }
  return adiff::reshape(out_(h), Shape{tokens.dim(0), points_per_cloud, config_.seg_dim});
}

template <typename T>
adiff::ParameterSet<T> SegmentationHead<T>::parameters() {
  adiff::ParameterSet<T> set;
  widen_.collect("seg_head.widen", set);
  block_.collect("seg_head.block", set);
  label_fc_.collect("seg_head.label", set);
  for (std::size_t i = 0; i < fcs_.size(); ++i) {
    fcs_[i].collect("seg_head.fc" + std::to_string(i + 1), set);
    bns_[i].collect("seg_head.bn" + std::to_string(i + 1), set);
  }
  out_.collect("seg_head.out", set);
  return set;
}

template class ClassificationHead<float>;
template class ClassificationHead<double>;
template class SegmentationHead<float>;
template class SegmentationHead<double>;

}  // namespace hfbri::mae
