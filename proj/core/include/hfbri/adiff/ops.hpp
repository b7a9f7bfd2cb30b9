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

#include <cstddef>
#include <span>
#include <vector>

#include "hfbri/adiff/tensor.hpp"
#include "hfbri/rng.hpp"

namespace hfbri::adiff {

// Shape errors name both operand shapes.

// [M, K] x [K, N] -> [M, N].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// x[..., in] * weight[in, out] + bias[out]. `bias` may be undefined.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Elementwise sum. `b` may also be a trailing-suffix broadcast of `a`
// (e.g. [N, D] + [D]).
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

// Tanh approximation.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x);

// Normalizes each row over the last axis, then applies gamma/beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));

// Running statistics for batch_norm; channels are the last axis.
template <typename T>
struct BatchNormStats {
  std::vector<T> mean;
  std::vector<T> var;
};

// Channels-last batch normalization. In training mode the batch statistics
// (biased variance) normalize and the running statistics are updated with
// `momentum` using the unbiased variance; in eval mode the running
// statistics normalize.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormStats<T>& stats, bool train, T momentum = T(0.1),
                     T eps = T(1e-5));

// Inverted dropout; identity when !train or p == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T p, bool train, Rng& rng);

// Reductions remove `axis`. Max ties resolve to the first index.
template <typename T>
Tensor<T> max_over_axis(const Tensor<T>& x, std::size_t axis);

template <typename T>
Tensor<T> mean_over_axis(const Tensor<T>& x, std::size_t axis);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> mean(const Tensor<T>& x);

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis);

// Selects rows along axis 0; indices may repeat.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> indices);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// Mean cross-entropy of logits [N, C] against integer labels.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

// softmax(Q_h K_h^T / sqrt(d_k)) V_h per head over inputs [B, T, D]; heads are
// contiguous slices of D. No masking.
template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k,
                                       const Tensor<T>& v, std::size_t heads);

}  // namespace hfbri::adiff
