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
#include "hfbri/mae/pipeline.hpp"

#include <numeric>

#include "hfbri/error.hpp"
#include "hfbri/mae/chamfer.hpp"

namespace hfbri::mae {

using adiff::Shape;
using adiff::Tensor;

PreparedCloud prepare_cloud(const PointCloud& aligned, const Rotation& rotation,
                            const ModelConfig& config, const FeatureOptions& options) {
  const PointCloud rotated = apply_rotation(aligned, rotation);
  PreparedCloud out;
  out.n_patches = config.n_patches;
  out.points_per_patch = config.points_per_patch;
  out.patches = patchify(rotated.points, config.n_patches, config.points_per_patch, 0);
  const CloudFeatures features = extract_features(rotated, out.patches, options);
  const std::size_t k = config.points_per_patch;
  out.rilf.reserve(config.n_patches * k * kRilfWidth);
  out.rigf.reserve(config.n_patches * kRigfWidth);
  out.targets.reserve(config.n_patches * k * 3);
  for (std::size_t p = 0; p < config.n_patches; ++p) {
    const auto& m = features.rilf[p];
    out.rilf.insert(out.rilf.end(), m.values.begin(), m.values.end());
    out.rigf.insert(out.rigf.end(), features.rigf[p].values.begin(), features.rigf[p].values.end());
    for (std::size_t idx : out.patches.row(p)) {
      const Vec3& a = aligned.points[idx];
      out.targets.insert(out.targets.end(), {a.x, a.y, a.z});
    }
  }
  out.points = rotated.points;
  if (aligned.part_labels) out.part_labels = *aligned.part_labels;
  out.label = aligned.label.value_or(-1);
  out.min_margin = features.min_margin();
  return out;
}

std::vector<bool> sample_mask(std::size_t n_patches, double ratio, std::uint64_t seed) {
  const std::size_t m = masked_count(n_patches, ratio);
  std::vector<std::size_t> idx(n_patches);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {0x6d61736bULL, n_patches}));
  rng.shuffle(idx.begin(), idx.end());
  std::vector<bool> mask(n_patches, false);
  for (std::size_t i = 0; i < m; ++i) mask[idx[i]] = true;
  return mask;
}

std::vector<std::size_t> mask_indices(const std::vector<bool>& mask, bool masked) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == masked) out.push_back(i);
  }
  return out;
}

template <typename T>
Tensor<T> rilf_tensor(std::span<const PreparedCloud* const> clouds,
                      const std::vector<std::vector<std::size_t>>* patch_subset) {
  if (clouds.empty()) throw SizeError("empty batch");
  const std::size_t k = clouds[0]->points_per_patch;
  const std::size_t row = k * kRilfWidth;
  std::size_t n = clouds[0]->n_patches;
  if (patch_subset) n = (*patch_subset)[0].size();
  std::vector<T> values;
  values.reserve(clouds.size() * n * row);
  for (std::size_t b = 0; b < clouds.size(); ++b) {
    const auto& c = *clouds[b];
    if (c.points_per_patch != k) throw ShapeError("batch mixes patch sizes");
    if (patch_subset) {
      const auto& sub = (*patch_subset)[b];
      if (sub.size() != n) throw ShapeError("batch mixes visible patch counts");
      for (std::size_t p : sub) {
        values.insert(values.end(), c.rilf.begin() + static_cast<std::ptrdiff_t>(p * row),
                      c.rilf.begin() + static_cast<std::ptrdiff_t>((p + 1) * row));
      }
    } else {
      if (c.n_patches != n) throw ShapeError("batch mixes patch counts");
      values.insert(values.end(), c.rilf.begin(), c.rilf.end());
    }
  }
  return Tensor<T>(Shape{clouds.size(), n, k, kRilfWidth}, std::move(values));
}

template <typename T>
Tensor<T> rigf_tensor(std::span<const PreparedCloud* const> clouds) {
  if (clouds.empty()) throw SizeError("empty batch");
  const std::size_t n = clouds[0]->n_patches;
  std::vector<T> values;
  values.reserve(clouds.size() * n * kRigfWidth);
  for (const auto* c : clouds) {
    if (c->n_patches != n) throw ShapeError("batch mixes patch counts");
    values.insert(values.end(), c->rigf.begin(), c->rigf.end());
  }
  return Tensor<T>(Shape{clouds.size(), n, kRigfWidth}, std::move(values));
}

template <typename T>
Tensor<T> pretrain_loss(MaskedAutoencoder<T>& model, std::span<const PreparedCloud* const> clouds,
                        const std::vector<std::vector<bool>>& masks, bool train) {
  const auto& cfg = model.config();
  if (masks.size() != clouds.size()) throw ShapeError("pretrain_loss: one mask per cloud required");
  std::vector<std::vector<std::size_t>> visible;
  visible.reserve(masks.size());
  for (const auto& m : masks) visible.push_back(mask_indices(m, false));
  const std::size_t d = cfg.embed_dim;
  const std::size_t n = cfg.n_patches;
  const std::size_t batch = clouds.size();
  const std::size_t nv = visible[0].size();

  auto positions_all = model.embed_positions(rigf_tensor<T>(clouds));
  std::vector<std::size_t> vis_rows;
  vis_rows.reserve(batch * nv);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p : visible[b]) vis_rows.push_back(b * n + p);
  }
  auto vis_pos = adiff::reshape(
      adiff::gather_rows(adiff::reshape(positions_all, Shape{batch * n, d}), std::span<const std::size_t>(vis_rows)),
      Shape{batch, nv, d});
  auto tokens = model.embed_tokens(rilf_tensor<T>(clouds, &visible), train);
  auto latent = model.encode(tokens, vis_pos).output;
  auto pred = model.decode(latent, positions_all, masks);

  const std::size_t k = cfg.points_per_patch;
  const std::size_t nm = n - nv;
  std::vector<T> targets;
  targets.reserve(batch * nm * k * 3);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p : mask_indices(masks[b], true)) {
      const auto& t = clouds[b]->targets;
      for (std::size_t i = p * k * 3; i < (p + 1) * k * 3; ++i) targets.push_back(static_cast<T>(t[i]));
    }
  }
  return chamfer_loss(adiff::reshape(pred, Shape{batch * nm, k, 3}), std::span<const T>(targets), k);
}

template <typename T>
Encoding<T> encode_clouds(MaskedAutoencoder<T>& model, std::span<const PreparedCloud* const> clouds,
                          bool train) {
  auto positions = model.embed_positions(rigf_tensor<T>(clouds));
  auto tokens = model.embed_tokens(rilf_tensor<T>(clouds), train);
  return model.encode(tokens, positions);
}

template <typename T>
Tensor<T> global_feature(const Tensor<T>& tokens) {
  if (tokens.rank() != 3) throw ShapeError("global_feature: expected [B, N, D], got " + adiff::to_string(tokens.shape()));
  return adiff::add(adiff::max_over_axis(tokens, 1), adiff::mean_over_axis(tokens, 1));
}

template <typename T>
Tensor<T> block_concat_feature(const Encoding<T>& encoding) {
  std::vector<Tensor<T>> pooled;
  pooled.reserve(encoding.block_outputs.size());
  for (const auto& b : encoding.block_outputs) pooled.push_back(adiff::mean_over_axis(b, 1));
  return adiff::concat(std::span<const Tensor<T>>(pooled), 1);
}

#define HFBRI_INSTANTIATE_PIPELINE(T)                                                                  \
  template Tensor<T> rilf_tensor<T>(std::span<const PreparedCloud* const>,                             \
                                    const std::vector<std::vector<std::size_t>>*);                     \
  template Tensor<T> rigf_tensor<T>(std::span<const PreparedCloud* const>);                            \
  template Tensor<T> pretrain_loss(MaskedAutoencoder<T>&, std::span<const PreparedCloud* const>,       \
                                   const std::vector<std::vector<bool>>&, bool);                       \
  template Encoding<T> encode_clouds(MaskedAutoencoder<T>&, std::span<const PreparedCloud* const>, bool); \
  template Tensor<T> global_feature(const Tensor<T>&);                                                 \
  template Tensor<T> block_concat_feature(const Encoding<T>&);

HFBRI_INSTANTIATE_PIPELINE(float)
HFBRI_INSTANTIATE_PIPELINE(double)

}  // namespace hfbri::mae
