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
#include "hfbri/mae/model.hpp"

#include <string>

#include "hfbri/error.hpp"
#include "hfbri/rihf.hpp"

namespace hfbri::mae {

using adiff::Shape;
using adiff::Tensor;

namespace {

constexpr std::size_t kTokenHidden1 = 64;
constexpr std::size_t kTokenHidden2 = 128;
constexpr std::size_t kPositionHidden = 128;
constexpr double kMaskTokenStd = 0.02;

}  // namespace

template <typename T>
MaskedAutoencoder<T>::MaskedAutoencoder(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  const std::size_t d = config_.embed_dim;
  Rng rng(derive_seed(seed, {0x6d6f64656cULL}));
  tok_fc1_ = adiff::Linear<T>(kRilfWidth, kTokenHidden1, rng);
  tok_bn1_ = adiff::BatchNorm<T>(kTokenHidden1);
  tok_fc2_ = adiff::Linear<T>(kTokenHidden1, kTokenHidden2, rng);
  tok_bn2_ = adiff::BatchNorm<T>(kTokenHidden2);
  tok_fc3_ = adiff::Linear<T>(kTokenHidden2, d, rng);
  tok_bn3_ = adiff::BatchNorm<T>(d);
  pos_fc1_ = adiff::Linear<T>(kRigfWidth, kPositionHidden, rng);
  pos_fc2_ = adiff::Linear<T>(kPositionHidden, d, rng);
  for (std::size_t b = 0; b < config_.encoder_blocks; ++b) encoder_.emplace_back(d, config_.heads, rng);
  for (std::size_t b = 0; b < config_.decoder_blocks; ++b) decoder_.emplace_back(d, config_.heads, rng);
  mask_token_ = Tensor<T>(Shape{d}, true);
  for (auto& v : mask_token_.mutable_data()) v = static_cast<T>(kMaskTokenStd * rng.normal());
  recon_head_ = adiff::Linear<T>(d, config_.points_per_patch * 3, rng);
}

template <typename T>
Tensor<T> MaskedAutoencoder<T>::embed_tokens(const Tensor<T>& rilf, bool train) {
  if (rilf.rank() != 4 || rilf.dim(3) != kRilfWidth) {
    throw ShapeError("embed_tokens: expected [B, N, K, 8], got " + adiff::to_string(rilf.shape()));
  }
  const std::size_t b = rilf.dim(0), n = rilf.dim(1), k = rilf.dim(2);
  auto x = adiff::reshape(rilf, Shape{b * n * k, kRilfWidth});
  x = adiff::relu(tok_bn1_(tok_fc1_(x), train));
  x = adiff::relu(tok_bn2_(tok_fc2_(x), train));
  x = adiff::relu(tok_bn3_(tok_fc3_(x), train));
  x = adiff::reshape(x, Shape{b * n, k, config_.embed_dim});
  return adiff::reshape(adiff::max_over_axis(x, 1), Shape{b, n, config_.embed_dim});
}

template <typename T>
Tensor<T> MaskedAutoencoder<T>::embed_positions(const Tensor<T>& rigf) const {
  if (rigf.rank() != 3 || rigf.dim(2) != kRigfWidth) {
    throw ShapeError("embed_positions: expected [B, N, 5], got " + adiff::to_string(rigf.shape()));
  }
  return pos_fc2_(adiff::gelu(pos_fc1_(rigf)));
}

template <typename T>
Encoding<T> MaskedAutoencoder<T>::encode(const Tensor<T>& tokens, const Tensor<T>& positions) const {
  if (tokens.rank() != 3 || tokens.shape() != positions.shape() || tokens.dim(2) != config_.embed_dim) {
    throw ShapeError("encode: tokens " + adiff::to_string(tokens.shape()) + " vs positions " +
                     adiff::to_string(positions.shape()));
  }
  Encoding<T> out;
  auto x = adiff::add(tokens, positions);
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    if (i > 0) x = adiff::add(out.block_outputs.back(), positions);
    out.block_outputs.push_back(encoder_[i](x));
  }
  out.output = out.block_outputs.back();
  return out;
}

template <typename T>
std::vector<std::size_t> MaskedAutoencoder<T>::decoder_order(
    const std::vector<std::vector<bool>>& masks) const {
  const std::size_t n = config_.n_patches;
  std::vector<std::size_t> order;
  order.reserve(masks.size() * n);
  for (std::size_t b = 0; b < masks.size(); ++b) {
    if (masks[b].size() != n) throw ShapeError("decode: mask length does not match n_patches");
    for (std::size_t i = 0; i < n; ++i) {
      if (!masks[b][i]) order.push_back(b * n + i);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (masks[b][i]) order.push_back(b * n + i);
    }
  }
  return order;
}

template <typename T>
Tensor<T> MaskedAutoencoder<T>::decoder_input(const Tensor<T>& latent, const Tensor<T>& positions_all,
                                              const std::vector<std::vector<bool>>& masks) const {
  const std::size_t d = config_.embed_dim;
  const std::size_t n = config_.n_patches;
  const std::size_t batch = masks.size();
  if (positions_all.shape() != Shape{batch, n, d}) {
    throw ShapeError("decode: positions " + adiff::to_string(positions_all.shape()) + " vs expected " +
                     adiff::to_string(Shape{batch, n, d}));
  }
  const std::size_t nv = latent.rank() == 3 ? latent.dim(1) : 0;
  if (latent.rank() != 3 || latent.dim(0) != batch || latent.dim(2) != d) {
    throw ShapeError("decode: latent " + adiff::to_string(latent.shape()));
  }
  const std::size_t nm = n - nv;
  for (const auto& m : masks) {
    std::size_t count = 0;
    for (bool v : m) count += v ? 1 : 0;
    if (count != nm) throw ShapeError("decode: mask does not match the visible latent count");
  }
  const auto order = decoder_order(masks);
  auto pos = adiff::reshape(
      adiff::gather_rows(adiff::reshape(positions_all, Shape{batch * n, d}), std::span<const std::size_t>(order)),
      Shape{batch, n, d});
  const std::vector<std::size_t> zeros(batch * nm, 0);
  auto tokens = adiff::reshape(
      adiff::gather_rows(adiff::reshape(mask_token_, Shape{1, d}), std::span<const std::size_t>(zeros)),
      Shape{batch, nm, d});
  const std::vector<Tensor<T>> parts{latent, tokens};
  return adiff::add(adiff::concat(std::span<const Tensor<T>>(parts), 1), pos);
}

template <typename T>
Tensor<T> MaskedAutoencoder<T>::decode(const Tensor<T>& latent, const Tensor<T>& positions_all,
                                       const std::vector<std::vector<bool>>& masks) const {
  const std::size_t d = config_.embed_dim;
  const std::size_t n = config_.n_patches;
  const std::size_t batch = masks.size();
  auto x = decoder_input(latent, positions_all, masks);
  const std::size_t nv = latent.dim(1);
  const std::size_t nm = n - nv;
  const auto order = decoder_order(masks);
  auto pos = adiff::reshape(
      adiff::gather_rows(adiff::reshape(positions_all, Shape{batch * n, d}), std::span<const std::size_t>(order)),
      Shape{batch, n, d});
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    if (i > 0) x = adiff::add(x, pos);
    x = decoder_[i](x);
  }
  std::vector<std::size_t> tail;
  tail.reserve(batch * nm);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = nv; j < n; ++j) tail.push_back(b * n + j);
  }
  auto masked = adiff::gather_rows(adiff::reshape(x, Shape{batch * n, d}), std::span<const std::size_t>(tail));
  return adiff::reshape(recon_head_(masked), Shape{batch, nm, config_.points_per_patch, 3});
}

template <typename T>
adiff::ParameterSet<T> MaskedAutoencoder<T>::encoder_parameters() {
  adiff::ParameterSet<T> set;
  tok_fc1_.collect("token_embed.fc1", set);
  tok_bn1_.collect("token_embed.bn1", set);
  tok_fc2_.collect("token_embed.fc2", set);
  tok_bn2_.collect("token_embed.bn2", set);
  tok_fc3_.collect("token_embed.fc3", set);
  tok_bn3_.collect("token_embed.bn3", set);
  pos_fc1_.collect("pos_embed.fc1", set);
  pos_fc2_.collect("pos_embed.fc2", set);
  for (std::size_t i = 0; i < encoder_.size(); ++i) encoder_[i].collect("encoder." + std::to_string(i), set);
  return set;
}

template <typename T>
adiff::ParameterSet<T> MaskedAutoencoder<T>::parameters() {
  auto set = encoder_parameters();
  for (std::size_t i = 0; i < decoder_.size(); ++i) decoder_[i].collect("decoder." + std::to_string(i), set);
  set.parameters.push_back({"mask_token", mask_token_});
  recon_head_.collect("recon_head", set);
  return set;
}

template class MaskedAutoencoder<float>;
template class MaskedAutoencoder<double>;

}  // namespace hfbri::mae
