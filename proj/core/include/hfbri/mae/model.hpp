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
#include <vector>

#include "hfbri/adiff/nn.hpp"
#include "hfbri/mae/config.hpp"

namespace hfbri::mae {

template <typename T>
struct Encoding {
  adiff::Tensor<T> output;                      // [B, N, D], last block
  std::vector<adiff::Tensor<T>> block_outputs;  // one [B, N, D] per block
};

// Token/position embeddings, transformer encoder, and the reconstruction
// decoder. Parameter initialization is a pure function of (config, seed).
template <typename T>
class MaskedAutoencoder {
 public:
  MaskedAutoencoder(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  // rilf [B, N, K, 8] -> [B, N, D]: shared pointwise MLP 8->64->128->D, each
  // stage affine + batch norm + relu, then max over the K points.
  adiff::Tensor<T> embed_tokens(const adiff::Tensor<T>& rilf, bool train);

  // rigf [B, N, 5] -> [B, N, D]: affine 5->128, GELU, affine 128->D.
  adiff::Tensor<T> embed_positions(const adiff::Tensor<T>& rigf) const;

  // Block 1 sees tokens + positions; every later block sees the previous
  // block's output + positions.
  Encoding<T> encode(const adiff::Tensor<T>& tokens, const adiff::Tensor<T>& positions) const;

  // latent [B, N_v, D] holds the visible patches in ascending patch order;
  // masks[b][i] marks patch i of cloud b as masked. Returns predicted
  // coordinates [B, N_m, K, 3] for the masked patches in ascending order.
  adiff::Tensor<T> decode(const adiff::Tensor<T>& latent, const adiff::Tensor<T>& positions_all,
                          const std::vector<std::vector<bool>>& masks) const;

  // The decoder input before the first block: visible latents followed by
  // one mask token per masked patch, each summed with its position.
  adiff::Tensor<T> decoder_input(const adiff::Tensor<T>& latent,
                                 const adiff::Tensor<T>& positions_all,
                                 const std::vector<std::vector<bool>>& masks) const;

  // All trainable tensors and buffers under stable dotted names.
  adiff::ParameterSet<T> parameters();
  // Encoder-side subset (embeddings and encoder blocks): what a downstream
  // head sees.
  adiff::ParameterSet<T> encoder_parameters();

  const adiff::Tensor<T>& mask_token() const { return mask_token_; }

 private:
  // Decoder sequence order (visible then masked) as flat [B * N] row ids.
  std::vector<std::size_t> decoder_order(const std::vector<std::vector<bool>>& masks) const;

  ModelConfig config_;
  adiff::Linear<T> tok_fc1_, tok_fc2_, tok_fc3_;
  adiff::BatchNorm<T> tok_bn1_, tok_bn2_, tok_bn3_;
  adiff::Linear<T> pos_fc1_, pos_fc2_;
  std::vector<adiff::TransformerBlock<T>> encoder_;
  std::vector<adiff::TransformerBlock<T>> decoder_;
  adiff::Tensor<T> mask_token_;
  adiff::Linear<T> recon_head_;
};

extern template class MaskedAutoencoder<float>;
extern template class MaskedAutoencoder<double>;

}  // namespace hfbri::mae
