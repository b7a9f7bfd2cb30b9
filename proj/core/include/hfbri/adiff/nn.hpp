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

// Parameterized layers built from the differentiable ops. Every module
// exposes its trainable tensors and running buffers under dotted names via
// collect(), which checkpointing and the optimizer both rely on.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hfbri/adiff/ops.hpp"
#include "hfbri/adiff/tensor.hpp"
#include "hfbri/rng.hpp"

namespace hfbri::adiff {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

// Non-trainable state (batch-norm running statistics).
template <typename T>
struct NamedBuffer {
  std::string name;
  std::vector<T>* values;
};

template <typename T>
struct ParameterSet {
  std::vector<NamedParameter<T>> parameters;
  std::vector<NamedBuffer<T>> buffers;

  std::vector<Tensor<T>> tensors() const;
  std::size_t parameter_count() const;
};

std::string join_name(const std::string& prefix, const std::string& name);

// y = x W + b with W stored [in, out].
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);

  Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, weight, bias); }
  void collect(const std::string& prefix, ParameterSet<T>& out);

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }

  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim);

  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gamma, beta); }
  void collect(const std::string& prefix, ParameterSet<T>& out);

  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(std::size_t dim);

  Tensor<T> operator()(const Tensor<T>& x, bool train) { return batch_norm(x, gamma, beta, stats, train); }
  void collect(const std::string& prefix, ParameterSet<T>& out);

  Tensor<T> gamma;
  Tensor<T> beta;
  BatchNormStats<T> stats;
};

// Multi-head self-attention over [B, T, D] with an output projection.
template <typename T>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t dim, std::size_t heads, Rng& rng);

  Tensor<T> operator()(const Tensor<T>& x) const;
  void collect(const std::string& prefix, ParameterSet<T>& out);

  std::size_t heads() const { return heads_; }

  Linear<T> query, key, value, proj;

 private:
  std::size_t heads_ = 1;
};

// Pre-norm transformer block: x + attn(ln(x)), then h + mlp(ln(h)) with a
// D -> 4D -> D GELU feed-forward.
template <typename T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(std::size_t dim, std::size_t heads, Rng& rng);

  Tensor<T> operator()(const Tensor<T>& x) const;
  void collect(const std::string& prefix, ParameterSet<T>& out);

  LayerNorm<T> norm1;
  MultiHeadAttention<T> attn;
  LayerNorm<T> norm2;
  Linear<T> fc1, fc2;
};

extern template class Linear<float>;
extern template class Linear<double>;
extern template class LayerNorm<float>;
extern template class LayerNorm<double>;
extern template class BatchNorm<float>;
extern template class BatchNorm<double>;
extern template class MultiHeadAttention<float>;
extern template class MultiHeadAttention<double>;
extern template class TransformerBlock<float>;
extern template class TransformerBlock<double>;
extern template struct ParameterSet<float>;
extern template struct ParameterSet<double>;

}  // namespace hfbri::adiff
