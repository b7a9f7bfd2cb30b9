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
#include "hfbri/mae/chamfer.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <vector>

#include "hfbri/error.hpp"

namespace hfbri::mae {

double chamfer_distance(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.empty() || gt.empty()) throw SizeError("chamfer: empty point set");
  double total = 0.0;
  for (const auto& g : gt) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pred) best = std::min(best, squared_distance(g, p));
    total += best;
  }
  for (const auto& p : pred) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : gt) best = std::min(best, squared_distance(g, p));
    total += best;
  }
  return total;
}

template <typename T>
adiff::Tensor<T> chamfer_loss(const adiff::Tensor<T>& pred, std::span<const T> targets,
                              std::size_t gt_points) {
  if (pred.rank() != 3 || pred.dim(2) != 3) {
    throw ShapeError("chamfer: prediction must be [G, M, 3], got " + adiff::to_string(pred.shape()));
  }
  const std::size_t groups = pred.dim(0), m = pred.dim(1);
  if (m == 0 || gt_points == 0 || groups == 0) throw SizeError("chamfer: empty point set");
  if (targets.size() != groups * gt_points * 3) {
    throw ShapeError("chamfer: " + std::to_string(targets.size()) + " target values for " +
                     std::to_string(groups) + " groups of " + std::to_string(gt_points) + " points");
  }
  const auto pv = pred.data();
  // For each gt point its nearest pred index, and vice versa.
  auto gt_to_pred = std::make_shared<std::vector<std::size_t>>(groups * gt_points);
  auto pred_to_gt = std::make_shared<std::vector<std::size_t>>(groups * m);
  auto tgt = std::make_shared<std::vector<T>>(targets.begin(), targets.end());
  double total = 0.0;
  std::vector<double> d2(m * gt_points);
  for (std::size_t g = 0; g < groups; ++g) {
    const T* pg = pv.data() + g * m * 3;
    const T* tg = tgt->data() + g * gt_points * 3;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < gt_points; ++j) {
        const double dx = static_cast<double>(pg[i * 3]) - tg[j * 3];
        const double dy = static_cast<double>(pg[i * 3 + 1]) - tg[j * 3 + 1];
        const double dz = static_cast<double>(pg[i * 3 + 2]) - tg[j * 3 + 2];
        d2[i * gt_points + j] = dx * dx + dy * dy + dz * dz;
      }
    }
    // Strict comparisons keep the smallest index on ties.
    for (std::size_t j = 0; j < gt_points; ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < m; ++i) {
        if (d2[i * gt_points + j] < d2[best * gt_points + j]) best = i;
      }
      (*gt_to_pred)[g * gt_points + j] = best;
      total += d2[best * gt_points + j];
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < gt_points; ++j) {
        if (d2[i * gt_points + j] < d2[i * gt_points + best]) best = j;
      }
      (*pred_to_gt)[g * m + i] = best;
      total += d2[i * gt_points + best];
    }
  }
  const double mean = total / static_cast<double>(groups);
  return adiff::Tensor<T>::make_result(
      {1}, {static_cast<T>(mean)}, {pred},
      [groups, m, gt_points, gt_to_pred, pred_to_gt, tgt](adiff::Node<T>& self) {
        auto grad = self.inputs[0]->grad_buffer();
        const auto& pv = self.inputs[0]->value;
        const T s = T(2) * self.grad[0] / static_cast<T>(groups);
        for (std::size_t g = 0; g < groups; ++g) {
          const T* tg = tgt->data() + g * gt_points * 3;
          const std::size_t pbase = g * m * 3;
          for (std::size_t j = 0; j < gt_points; ++j) {
            const std::size_t i = (*gt_to_pred)[g * gt_points + j];
            for (int c = 0; c < 3; ++c) grad[pbase + i * 3 + c] += s * (pv[pbase + i * 3 + c] - tg[j * 3 + c]);
          }
          for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = (*pred_to_gt)[g * m + i];
            for (int c = 0; c < 3; ++c) grad[pbase + i * 3 + c] += s * (pv[pbase + i * 3 + c] - tg[j * 3 + c]);
          }
        }
      });
}

template adiff::Tensor<float> chamfer_loss(const adiff::Tensor<float>&, std::span<const float>, std::size_t);
template adiff::Tensor<double> chamfer_loss(const adiff::Tensor<double>&, std::span<const double>, std::size_t);

}  // namespace hfbri::mae
