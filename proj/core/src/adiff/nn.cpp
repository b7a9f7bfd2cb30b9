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
#include "hfbri/adiff/nn.hpp"

#include <cmath>

#include "hfbri/error.hpp"

namespace hfbri::adiff {

std::string join_name(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

template <typename T>
std::vector<Tensor<T>> ParameterSet<T>::tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(parameters.size());
  for (const auto& p : parameters) out.push_back(p.tensor);
  return out;
}

template <typename T>
std::size_t ParameterSet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters) n += p.tensor.numel();
  return n;
}

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias)
    : weight(Shape{in, out}, true) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in));
  for (auto& w : weight.mutable_data()) w = static_cast<T>(rng.uniform(-bound, bound));
  if (with_bias) bias = Tensor<T>(Shape{out}, true);
}

template <typename T>
void Linear<T>::collect(const std::string& prefix, ParameterSet<T>& out) {
  out.parameters.push_back({join_name(prefix, "weight"), weight});
  if (bias.defined()) out.parameters.push_back({join_name(prefix, "bias"), bias});
}

template <typename T>
LayerNorm<T>::LayerNorm(std::size_t dim)
    : gamma(Shape{dim}, std::vector<T>(dim, T(1)), true), beta(Shape{dim}, true) {}

template <typename T>
void LayerNorm<T>::collect(const std::string& prefix, ParameterSet<T>& out) {
  out.parameters.push_back({join_name(prefix, "gamma"), gamma});
  out.parameters.push_back({join_name(prefix, "beta"), beta});
}

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t dim)
    : gamma(Shape{dim}, std::vector<T>(dim, T(1)), true),
      beta(Shape{dim}, true),
      stats{std::vector<T>(dim, T(0)), std::vector<T>(dim, T(1))} {}

template <typename T>
void BatchNorm<T>::collect(const std::string& prefix, ParameterSet<T>& out) {
  out.parameters.push_back({join_name(prefix, "gamma"), gamma});
  out.parameters.push_back({join_name(prefix, "beta"), beta});
  out.buffers.push_back({join_name(prefix, "running_mean"), &stats.mean});
  out.buffers.push_back({join_name(prefix, "running_var"), &stats.var});
}

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(std::size_t dim, std::size_t heads, Rng& rng)
    : heads_(heads) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("attention width " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  query = Linear<T>(dim, dim, rng);
  key = Linear<T>(dim, dim, rng);
  value = Linear<T>(dim, dim, rng);
  proj = Linear<T>(dim, dim, rng);
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::operator()(const Tensor<T>& x) const {
  auto mixed = scaled_dot_product_attention(query(x), key(x), value(x), heads_);
  return proj(mixed);
}

template <typename T>
void MultiHeadAttention<T>::collect(const std::string& prefix, ParameterSet<T>& out) {
  query.collect(join_name(prefix, "query"), out);
  key.collect(join_name(prefix, "key"), out);
  value.collect(join_name(prefix, "value"), out);
  proj.collect(join_name(prefix, "proj"), out);
}

template <typename T>
TransformerBlock<T>::TransformerBlock(std::size_t dim, std::size_t heads, Rng& rng)
    : norm1(dim), attn(dim, heads, rng), norm2(dim), fc1(dim, 4 * dim, rng), fc2(4 * dim, dim, rng) {}

template <typename T>
Tensor<T> TransformerBlock<T>::operator()(const Tensor<T>& x) const {
  auto h = add(x, attn(norm1(x)));
  return add(h, fc2(gelu(fc1(norm2(h)))));
}

template <typename T>
void TransformerBlock<T>::collect(const std::string& prefix, ParameterSet<T>& out) {
  norm1.collect(join_name(prefix, "norm1"), out);
  attn.collect(join_name(prefix, "attn"), out);
  norm2.collect(join_name(prefix, "norm2"), out);
  fc1.collect(join_name(prefix, "fc1"), out);
  fc2.collect(join_name(prefix, "fc2"), out);
}

template class Linear<float>;
template class Linear<double>;
template class LayerNorm<float>;
template class LayerNorm<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class MultiHeadAttention<float>;
template class MultiHeadAttention<double>;
template class TransformerBlock<float>;
template class TransformerBlock<double>;
template struct ParameterSet<float>;
template struct ParameterSet<double>;

}  // namespace hfbri::adiff
