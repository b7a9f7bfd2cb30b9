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

#include <span>

#include "hfbri/adiff/tensor.hpp"
#include "hfbri/vec3.hpp"

namespace hfbri::mae {

// Sum over gt of the squared distance to the nearest pred point plus the sum
// over pred of the squared distance to the nearest gt point. Throws
// SizeError when either set is empty.
double chamfer_distance(std::span<const Vec3> pred, std::span<const Vec3> gt);

// Batched, differentiable form: pred [G, M, 3] against targets holding
// G x gt_points x 3 values. Returns the mean over the G groups of the
// per-group Chamfer distance. Gradients flow to pred through the argmin
// pairings.
template <typename T>
adiff::Tensor<T> chamfer_loss(const adiff::Tensor<T>& pred, std::span<const T> targets,
                              std::size_t gt_points);

}  // namespace hfbri::mae
