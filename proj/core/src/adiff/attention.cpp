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
#include <algorithm>
#include <cmath>
#include <memory>

#include "hfbri/adiff/ops.hpp"
#include "hfbri/error.hpp"
#include "kernels.hpp"

namespace hfbri::adiff {
namespace {

// Copies head `h` of a [T, D] slab into a contiguous [T, dk] buffer.
template <typename T>
void pack_head(const T* src, std::size_t tokens, std::size_t d, std::size_t h, std::size_t dk, T* dst) {
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t j = 0; j < dk; ++j) dst[t * dk + j] = src[t * d + h * dk + j];
  }
}

template <typename T>
void unpack_head_add(const T* src, std::size_t tokens, std::size_t d, std::size_t h, std::size_t dk, T* dst) {
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t j = 0; j < dk; ++j) dst[t * d + h * dk + j] += src[t * dk + j];
  }
}

}  // namespace

template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                       std::size_t heads) {
  if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape()) {
    throw ShapeError("attention: q/k/v must share a [B, T, D] shape, got " + to_string(q.shape()) +
                     ", " + to_string(k.shape()) + ", " + to_string(v.shape()));
  }
  const std::size_t b = q.dim(0), tk = q.dim(1), d = q.dim(2);
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t dk = d / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dk));
  // Attention probabilities, kept for the backward pass: [B, H, T, T].
  auto probs = std::make_shared<std::vector<T>>(b * heads * tk * tk);
  std::vector<T> out(q.numel(), T(0));
  std::vector<T> qh(tk * dk), kh(tk * dk), vh(tk * dk), oh(tk * dk);
  for (std::size_t bi = 0; bi < b; ++bi) {
    const std::size_t base = bi * tk * d;
    for (std::size_t h = 0; h < heads; ++h) {
      pack_head(q.data().data() + base, tk, d, h, dk, qh.data());
      pack_head(k.data().data() + base, tk, d, h, dk, kh.data());
      pack_head(v.data().data() + base, tk, d, h, dk, vh.data());
      T* p = probs->data() + (bi * heads + h) * tk * tk;
      kernels::gemm_nt(tk, tk, dk, qh.data(), kh.data(), p, false);
      for (std::size_t i = 0; i < tk; ++i) {
        T* row = p + i * tk;
        T mx = row[0] * inv_sqrt;
        for (std::size_t j = 0; j < tk; ++j) {
          row[j] *= inv_sqrt;
          mx = std::max(mx, row[j]);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < tk; ++j) {
          row[j] = std::exp(row[j] - mx);
          s += row[j];
        }
        for (std::size_t j = 0; j < tk; ++j) row[j] = static_cast<T>(row[j] / s);
      }
      kernels::gemm_nn(tk, dk, tk, p, vh.data(), oh.data(), false);
      unpack_head_add(oh.data(), tk, d, h, dk, out.data() + base);
    }
  }
  return Tensor<T>::make_result(q.shape(), std::move(out), {q, k, v},
                                [b, tk, d, heads, dk, inv_sqrt, probs](Node<T>& self) {
    auto& nq = self.inputs[0];
    auto& nk = self.inputs[1];
    auto& nv = self.inputs[2];
    const bool gq = nq->requires_grad, gk = nk->requires_grad, gv = nv->requires_grad;
    std::vector<T> qh(tk * dk), kh(tk * dk), vh(tk * dk), goh(tk * dk);
    std::vector<T> dp(tk * tk), dq(tk * dk), dkk(tk * dk), dv(tk * dk);
    for (std::size_t bi = 0; bi < b; ++bi) {
      const std::size_t base = bi * tk * d;
      for (std::size_t h = 0; h < heads; ++h) {
        const T* p = probs->data() + (bi * heads + h) * tk * tk;
        pack_head(self.grad.data() + base, tk, d, h, dk, goh.data());
        pack_head(nq->value.data() + base, tk, d, h, dk, qh.data());
        pack_head(nk->value.data() + base, tk, d, h, dk, kh.data());
        pack_head(nv->value.data() + base, tk, d, h, dk, vh.data());
        if (gv) {
          kernels::gemm_tn(tk, dk, tk, p, goh.data(), dv.data(), false);
          unpack_head_add(dv.data(), tk, d, h, dk, nv->grad_buffer().data() + base);
        }
        if (!gq && !gk) continue;
        // dP = dO V^T, then the softmax Jacobian gives dS.
        kernels::gemm_nt(tk, tk, dk, goh.data(), vh.data(), dp.data(), false);
        for (std::size_t i = 0; i < tk; ++i) {
          double dotp = 0.0;
          for (std::size_t j = 0; j < tk; ++j) dotp += static_cast<double>(dp[i * tk + j]) * p[i * tk + j];
          for (std::size_t j = 0; j < tk; ++j) {
            dp[i * tk + j] = p[i * tk + j] * (dp[i * tk + j] - static_cast<T>(dotp)) * inv_sqrt;
          }
        }
        if (gq) {
          kernels::gemm_nn(tk, dk, tk, dp.data(), kh.data(), dq.data(), false);
          unpack_head_add(dq.data(), tk, d, h, dk, nq->grad_buffer().data() + base);
        }
        if (gk) {
          kernels::gemm_tn(tk, dk, tk, dp.data(), qh.data(), dkk.data(), false);
          unpack_head_add(dkk.data(), tk, d, h, dk, nk->grad_buffer().data() + base);
        }
      }
    }
  });
}

template Tensor<float> scaled_dot_product_attention(const Tensor<float>&, const Tensor<float>&,
                                                    const Tensor<float>&, std::size_t);
template Tensor<double> scaled_dot_product_attention(const Tensor<double>&, const Tensor<double>&,
                                                     const Tensor<double>&, std::size_t);

}  // namespace hfbri::adiff
