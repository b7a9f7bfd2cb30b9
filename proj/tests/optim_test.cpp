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
#include "gtest/gtest.h"
#include "hfbri/adiff/optim.hpp"
#include "hfbri/adiff/ops.hpp"
#include "hfbri/error.hpp"

namespace hfbri::adiff {
namespace {

TEST(AdamWTest, ZeroGradientZeroDecayLeavesParams) {
  std::vector<double> p{0.5, -1.5};
  const std::vector<double> g{0.0, 0.0};
  AdamWState<double> state;
  for (int i = 0; i < 5; ++i) adamw_step<double>(p, g, state, 0.1, AdamWOptions{}, 0.0);
  EXPECT_EQ(p, (std::vector<double>{0.5, -1.5}));
}

TEST(AdamWTest, FirstStepMovesByLr) {
  std::vector<double> p{1.0};
  const std::vector<double> g{1.0};
  AdamWState<double> state;
  adamw_step<double>(p, g, state, 0.1, AdamWOptions{}, 0.0);
  // m_hat = 1, v_hat = 1: step = lr / (1 + eps).
  EXPECT_NEAR(p[0], 1.0 - 0.1, 1e-3);
  EXPECT_NEAR(p[0], 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(AdamWTest, DecoupledDecayWithZeroGradient) {
  std::vector<double> p{2.0};
  const std::vector<double> g{0.0};
  AdamWState<double> state;
  adamw_step<double>(p, g, state, 0.01, AdamWOptions{}, 0.05);
  EXPECT_NEAR(p[0], 2.0 * (1.0 - 0.01 * 0.05), 1e-15);
}

TEST(AdamWTest, ShapeMismatch) {
  std::vector<double> p{1.0, 2.0};
  const std::vector<double> g{1.0};
  AdamWState<double> state;
  EXPECT_THROW(adamw_step<double>(p, g, state, 0.1, AdamWOptions{}, 0.0), ShapeError);
}

TEST(AdamWTest, MinimizesQuadratic) {
  Tensor<double> x(Shape{1, 2}, {3.0, -2.0}, true);
  AdamWOptions opts;
  opts.weight_decay = 0.0;
  AdamW<double> opt({x}, opts);
  for (int i = 0; i < 500; ++i) {
    backward(adiff::sum(adiff::mul(x, x)));
    opt.step(0.05);
    opt.zero_grad();
  }
  EXPECT_NEAR(x.data()[0], 0.0, 1e-2);
  EXPECT_NEAR(x.data()[1], 0.0, 1e-2);
}

TEST(AdamWTest, DecayOnlyOnMatricesAndSkipsMissingGrads) {
  Tensor<double> w(Shape{1, 1}, {1.0}, true);
  Tensor<double> b(Shape{1}, {1.0}, true);
  Tensor<double> unused(Shape{2, 2}, {1.0, 1.0, 1.0, 1.0}, true);
  AdamWOptions opts;
  opts.weight_decay = 0.5;
  AdamW<double> opt({w, b, unused}, opts);
  w.mutable_grad()[0] = 0.0;
  b.mutable_grad()[0] = 0.0;
  opt.step(0.1);
  EXPECT_NEAR(w.data()[0], 0.95, 1e-15);
  EXPECT_EQ(b.data()[0], 1.0);
  EXPECT_EQ(unused.data()[0], 1.0);
}

TEST(CosineLrTest, WarmupPeakAndFloor) {
  const std::size_t total = 1000;  // warmup = 50 steps
  EXPECT_NEAR(cosine_lr(0, total, 1e-3), 1e-3 / 50, 1e-18);
  EXPECT_NEAR(cosine_lr(49, total, 1e-3), 1e-3, 1e-18);
  EXPECT_NEAR(cosine_lr(total - 1, total, 1e-3), 1e-9, 1e-18);
  double prev = cosine_lr(49, total, 1e-3);
  for (std::size_t s = 50; s < total; ++s) {
    const double lr = cosine_lr(s, total, 1e-3);
    EXPECT_LE(lr, prev);
    EXPECT_GE(lr, 1e-9 - 1e-20);
    prev = lr;
  }
}

TEST(CosineLrTest, SingleStep) { EXPECT_GT(cosine_lr(0, 1, 1e-3), 0.0); }

}  // namespace
}  // namespace hfbri::adiff
