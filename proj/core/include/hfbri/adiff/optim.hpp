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

namespace hfbri::adiff {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

template <typename T>
struct AdamWState {
  std::vector<T> m;
  std::vector<T> v;
  std::size_t step = 0;
};

// One decoupled-weight-decay Adam update of `param` in place:
//   p <- p - lr * wd * p - lr * m_hat / (sqrt(v_hat) + eps)
// State buffers are allocated on first use. Throws ShapeError when the
// gradient or existing state does not match the parameter length.
template <typename T>
void adamw_step(std::span<T> param, std::span<const T> grad, AdamWState<T>& state, double lr,
                const AdamWOptions& options, double weight_decay);

// Optimizer over a fixed parameter list. Decay applies only to tensors of
// rank >= 2 (weights); biases, norm affines and embeddings-as-vectors are
// not decayed. Parameters without an accumulated gradient are skipped.
template <typename T>
class AdamW {
 public:
  AdamW(std::vector<Tensor<T>> params, AdamWOptions options);

  void step(double lr);
  void zero_grad();

  const std::vector<Tensor<T>>& params() const { return params_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<AdamWState<T>> states_;
  AdamWOptions options_;
};

// Cosine schedule with linear warmup over the first `warmup_fraction` of
// steps, decaying to `floor_ratio * peak` at the final step.
double cosine_lr(std::size_t step, std::size_t total_steps, double peak,
                 double warmup_fraction = 0.05, double floor_ratio = 1e-6);

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace hfbri::adiff
