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
#include "hfbri/adiff/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hfbri/error.hpp"

namespace hfbri::adiff {

template <typename T>
void adamw_step(std::span<T> param, std::span<const T> grad, AdamWState<T>& state, double lr,
                const AdamWOptions& options, double weight_decay) {
  if (grad.size() != param.size()) {
    throw ShapeError("adamw: gradient length " + std::to_string(grad.size()) +
                     " does not match parameter length " + std::to_string(param.size()));
  }
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(param.size(), T(0));
    state.v.assign(param.size(), T(0));
  }
  if (state.m.size() != param.size() || state.v.size() != param.size()) {
    throw ShapeError("adamw: optimizer state does not match parameter length " +
                     std::to_string(param.size()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(options.beta1, t);
  const double bc2 = 1.0 - std::pow(options.beta2, t);
  const double decay = 1.0 - lr * weight_decay;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double m = options.beta1 * state.m[i] + (1.0 - options.beta1) * g;
    const double v = options.beta2 * state.v[i] + (1.0 - options.beta2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    const double update = (m / bc1) / (std::sqrt(v / bc2) + options.eps);
    param[i] = static_cast<T>(param[i] * decay - lr * update);
  }
}

template <typename T>
AdamW<T>::AdamW(std::vector<Tensor<T>> params, AdamWOptions options)
    : params_(std::move(params)), states_(params_.size()), options_(options) {}

template <typename T>
void AdamW<T>::step(double lr) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const double wd = p.rank() >= 2 ? options_.weight_decay : 0.0;
    adamw_step<T>(p.mutable_data(), p.grad(), states_[i], lr, options_, wd);
  }
}

template <typename T>
void AdamW<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double cosine_lr(std::size_t step, std::size_t total_steps, double peak, double warmup_fraction,
                 double floor_ratio) {
  if (total_steps == 0) return peak;
  const auto warmup = static_cast<std::size_t>(std::ceil(warmup_fraction * static_cast<double>(total_steps)));
  if (step < warmup) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const double floor = peak * floor_ratio;
  const std::size_t span = total_steps > warmup + 1 ? total_steps - warmup - 1 : 1;
  const double progress = std::min(1.0, static_cast<double>(step - warmup) / static_cast<double>(span));
  return floor + 0.5 * (peak - floor) * (1.0 + std::cos(std::numbers::pi * progress));
}

template void adamw_step<float>(std::span<float>, std::span<const float>, AdamWState<float>&, double,
                                const AdamWOptions&, double);
template void adamw_step<double>(std::span<double>, std::span<const double>, AdamWState<double>&, double,
                                 const AdamWOptions&, double);
template class AdamW<float>;
template class AdamW<double>;

}  // namespace hfbri::adiff
