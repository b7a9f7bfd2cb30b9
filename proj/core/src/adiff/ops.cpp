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
#include "hfbri/adiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hfbri/error.hpp"
#include "kernels.hpp"

namespace hfbri::adiff {
namespace {

using Acc = double;  // accumulator for reductions

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                   to_string(b));
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + to_string(s));
  AxisSplit out;
  for (std::size_t i = 0; i < axis; ++i) out.outer *= s[i];
  out.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) out.inner *= s[i];
  return out;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out.push_back(s[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

template <typename T>
bool wants_grad(const std::shared_ptr<Node<T>>& n) {
  return n && n->requires_grad;
}

// Elementwise unary op with derivative computed from (x, y).
template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& x, F f, D df) {
  std::vector<T> y(x.numel());
  const auto xv = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return Tensor<T>::make_result(x.shape(), std::move(y), {x}, [df](Node<T>& self) {
    auto& in = self.inputs[0];
    auto g = in->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(in->value[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> c(m * n);
  kernels::gemm_nn(m, n, k, a.data().data(), b.data().data(), c.data(), false);
  return Tensor<T>::make_result({m, n}, std::move(c), {a, b}, [m, n, k](Node<T>& self) {
    auto& na = self.inputs[0];
    auto& nb = self.inputs[1];
    if (wants_grad(na)) kernels::gemm_nt(m, k, n, self.grad.data(), nb->value.data(), na->grad_buffer().data(), true);
    if (wants_grad(nb)) kernels::gemm_tn(m, n, k, na->value.data(), self.grad.data(), nb->grad_buffer().data(), true);
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2 || x.rank() < 1 || x.shape().back() != weight.dim(0)) {
    shape_error("linear", x.shape(), weight.shape());
  }
  const std::size_t in = weight.dim(0), out = weight.dim(1);
  if (bias.defined() && bias.numel() != out) shape_error("linear(bias)", weight.shape(), bias.shape());
  const std::size_t rows = x.numel() / in;
  Shape shape = x.shape();
  shape.back() = out;
  std::vector<T> y(rows * out);
  if (bias.defined()) {
    const auto bv = bias.data();
    for (std::size_t r = 0; r < rows; ++r) std::copy(bv.begin(), bv.end(), y.begin() + static_cast<std::ptrdiff_t>(r * out));
  }
  kernels::gemm_nn(rows, out, in, x.data().data(), weight.data().data(), y.data(), bias.defined());
  std::vector<Tensor<T>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return Tensor<T>::make_result(std::move(shape), std::move(y), std::move(inputs),
                                [rows, in, out](Node<T>& self) {
    auto& nx = self.inputs[0];
    auto& nw = self.inputs[1];
    if (wants_grad(nx)) kernels::gemm_nt(rows, in, out, self.grad.data(), nw->value.data(), nx->grad_buffer().data(), true);
    if (wants_grad(nw)) kernels::gemm_tn(rows, out, in, nx->value.data(), self.grad.data(), nw->grad_buffer().data(), true);
    if (self.inputs.size() > 2 && wants_grad(self.inputs[2])) {
      std::vector<Acc> acc(out, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < out; ++j) acc[j] += self.grad[r * out + j];
      }
      auto gb = self.inputs[2]->grad_buffer();
      for (std::size_t j = 0; j < out; ++j) gb[j] += static_cast<T>(acc[j]);
    }
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  const bool same = sa == sb;
  if (!same) {
    const bool suffix = sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin());
    if (!suffix) shape_error("add", sa, sb);
  }
  const std::size_t nb = b.numel();
  std::vector<T> y(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i % nb];
  return Tensor<T>::make_result(sa, std::move(y), {a, b}, [nb](Node<T>& self) {
    if (wants_grad(self.inputs[0])) {
      auto g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self.inputs[1])) {
      std::vector<Acc> acc(nb, 0.0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc[i % nb] += self.grad[i];
      auto g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < nb; ++i) g[i] += static_cast<T>(acc[i]);
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  std::vector<T> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * b.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(y), {a, b}, [](Node<T>& self) {
    auto& na = self.inputs[0];
    auto& nb = self.inputs[1];
    if (wants_grad(na)) {
      auto g = na->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb->value[i];
    }
    if (wants_grad(nb)) {
      auto g = nb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * na->value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return unary(x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T kC = T(0.7978845608028654);  // sqrt(2 / pi)
  constexpr T kA = T(0.044715);
  return unary(
      x,
      [](T v) { return T(0.5) * v * (T(1) + std::tanh(kC * (v + kA * v * v * v))); },
      [](T v, T) {
        const T t = std::tanh(kC * (v + kA * v * v * v));
        return T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * kC * (T(1) + T(3) * kA * v * v);
      });
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.numel() / c;
  std::vector<T> y(x.numel());
  const auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * c;
    T* out = y.data() + r * c;
    const T mx = *std::max_element(in, in + c);
    Acc s = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out[j] = std::exp(in[j] - mx);
      s += out[j];
    }
    for (std::size_t j = 0; j < c; ++j) out[j] = static_cast<T>(out[j] / s);
  }
  return Tensor<T>::make_result(x.shape(), std::move(y), {x}, [rows, c](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* yv = self.value.data() + r * c;
      const T* gy = self.grad.data() + r * c;
      Acc dotp = 0.0;
      for (std::size_t j = 0; j < c; ++j) dotp += static_cast<Acc>(gy[j]) * yv[j];
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] += yv[j] * (gy[j] - static_cast<T>(dotp));
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const std::size_t c = x.shape().back();
  if (gamma.numel() != c || beta.numel() != c) shape_error("layer_norm", x.shape(), gamma.shape());
  const std::size_t rows = x.numel() / c;
  std::vector<T> y(x.numel());
  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * c;
    Acc mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += in[j];
    mu /= static_cast<Acc>(c);
    Acc var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<Acc>(c);
    const Acc is = 1.0 / std::sqrt(var + static_cast<Acc>(eps));
    (*inv_std)[r] = static_cast<T>(is);
    for (std::size_t j = 0; j < c; ++j) {
      const T h = static_cast<T>((in[j] - mu) * is);
      (*xhat)[r * c + j] = h;
      y[r * c + j] = h * gv[j] + bv[j];
    }
  }
  return Tensor<T>::make_result(x.shape(), std::move(y), {x, gamma, beta},
                                [rows, c, xhat, inv_std](Node<T>& self) {
    auto& nx = self.inputs[0];
    auto& ng = self.inputs[1];
    auto& nbeta = self.inputs[2];
    if (wants_grad(ng) || wants_grad(nbeta)) {
      std::vector<Acc> dg(c, 0.0), db(c, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) {
          dg[j] += static_cast<Acc>(self.grad[r * c + j]) * (*xhat)[r * c + j];
          db[j] += self.grad[r * c + j];
        }
      }
      if (wants_grad(ng)) {
        auto g = ng->grad_buffer();
        for (std::size_t j = 0; j < c; ++j) g[j] += static_cast<T>(dg[j]);
      }
      if (wants_grad(nbeta)) {
        auto g = nbeta->grad_buffer();
        for (std::size_t j = 0; j < c; ++j) g[j] += static_cast<T>(db[j]);
      }
    }
    if (wants_grad(nx)) {
      auto gx = nx->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        Acc mean_g = 0.0, mean_gx = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          const Acc gh = static_cast<Acc>(self.grad[r * c + j]) * ng->value[j];
          mean_g += gh;
          mean_gx += gh * (*xhat)[r * c + j];
        }
        mean_g /= static_cast<Acc>(c);
        mean_gx /= static_cast<Acc>(c);
        for (std::size_t j = 0; j < c; ++j) {
          const Acc gh = static_cast<Acc>(self.grad[r * c + j]) * ng->value[j];
          gx[r * c + j] += static_cast<T>((*inv_std)[r] * (gh - mean_g - (*xhat)[r * c + j] * mean_gx));
        }
      }
    }
  });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormStats<T>& stats, bool train, T momentum, T eps) {
  const std::size_t c = x.shape().back();
  if (gamma.numel() != c || beta.numel() != c) shape_error("batch_norm", x.shape(), gamma.shape());
  if (stats.mean.size() != c) {
    stats.mean.assign(c, T(0));
    stats.var.assign(c, T(1));
  }
  const std::size_t rows = x.numel() / c;
  const auto xv = x.data();
  auto mu = std::make_shared<std::vector<T>>(c);
  auto inv_std = std::make_shared<std::vector<T>>(c);
  if (train) {
    std::vector<Acc> m(c, 0.0), v(c, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < c; ++j) m[j] += xv[r * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) m[j] /= static_cast<Acc>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        const Acc d = xv[r * c + j] - m[j];
        v[j] += d * d;
      }
    }
    for (std::size_t j = 0; j < c; ++j) {
      const Acc biased = v[j] / static_cast<Acc>(rows);
      const Acc unbiased = rows > 1 ? v[j] / static_cast<Acc>(rows - 1) : biased;
      (*mu)[j] = static_cast<T>(m[j]);
      (*inv_std)[j] = static_cast<T>(1.0 / std::sqrt(biased + static_cast<Acc>(eps)));
      stats.mean[j] = static_cast<T>((1.0 - momentum) * stats.mean[j] + momentum * m[j]);
      stats.var[j] = static_cast<T>((1.0 - momentum) * stats.var[j] + momentum * unbiased);
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      (*mu)[j] = stats.mean[j];
      (*inv_std)[j] = static_cast<T>(1.0 / std::sqrt(static_cast<Acc>(stats.var[j]) + static_cast<Acc>(eps)));
    }
  }
  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  std::vector<T> y(x.numel());
  const auto gv = gamma.data();
  const auto bv = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < c; ++j) {
      const T h = (xv[r * c + j] - (*mu)[j]) * (*inv_std)[j];
      (*xhat)[r * c + j] = h;
      y[r * c + j] = h * gv[j] + bv[j];
    }
  }
  return Tensor<T>::make_result(x.shape(), std::move(y), {x, gamma, beta},
                                [rows, c, xhat, inv_std, train](Node<T>& self) {
    auto& nx = self.inputs[0];
    auto& ng = self.inputs[1];
    auto& nbeta = self.inputs[2];
    std::vector<Acc> dg(c, 0.0), db(c, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        dg[j] += static_cast<Acc>(self.grad[r * c + j]) * (*xhat)[r * c + j];
        db[j] += self.grad[r * c + j];
      }
    }
    if (wants_grad(ng)) {
      auto g = ng->grad_buffer();
      for (std::size_t j = 0; j < c; ++j) g[j] += static_cast<T>(dg[j]);
    }
    if (wants_grad(nbeta)) {
      auto g = nbeta->grad_buffer();
      for (std::size_t j = 0; j < c; ++j) g[j] += static_cast<T>(db[j]);
    }
    if (wants_grad(nx)) {
      auto gx = nx->grad_buffer();
      const Acc n = static_cast<Acc>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) {
          const Acc scale_j = static_cast<Acc>(ng->value[j]) * (*inv_std)[j];
          const Acc gy = self.grad[r * c + j];
          if (train) {
            gx[r * c + j] += static_cast<T>(scale_j * (gy - db[j] / n - (*xhat)[r * c + j] * dg[j] / n));
          } else {
            gx[r * c + j] += static_cast<T>(scale_j * gy);
          }
        }
      }
    }
  });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T p, bool train, Rng& rng) {
  if (!train || p <= T(0)) return x;
  auto mask = std::make_shared<std::vector<T>>(x.numel());
  const T keep_scale = T(1) / (T(1) - p);
  std::vector<T> y(x.numel());
  for (std::size_t i = 0; i < y.size(); ++i) {
    (*mask)[i] = rng.uniform() >= static_cast<double>(p) ? keep_scale : T(0);
    y[i] = x.data()[i] * (*mask)[i];
  }
  return Tensor<T>::make_result(x.shape(), std::move(y), {x}, [mask](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (*mask)[i];
  });
}

template <typename T>
Tensor<T> max_over_axis(const Tensor<T>& x, std::size_t axis) {
  const auto sp = split_axis(x.shape(), axis);
  std::vector<T> y(sp.outer * sp.inner);
  auto arg = std::make_shared<std::vector<std::size_t>>(y.size());
  const auto xv = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t i = 0; i < sp.inner; ++i) {
      std::size_t best = o * sp.len * sp.inner + i;
      for (std::size_t l = 1; l < sp.len; ++l) {
        const std::size_t idx = (o * sp.len + l) * sp.inner + i;
        if (xv[idx] > xv[best]) best = idx;
      }
      y[o * sp.inner + i] = xv[best];
      (*arg)[o * sp.inner + i] = best;
    }
  }
  return Tensor<T>::make_result(drop_axis(x.shape(), axis), std::move(y), {x}, [arg](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < arg->size(); ++i) g[(*arg)[i]] += self.grad[i];
  });
}

template <typename T>
Tensor<T> mean_over_axis(const Tensor<T>& x, std::size_t axis) {
  const auto sp = split_axis(x.shape(), axis);
  std::vector<T> y(sp.outer * sp.inner);
  const auto xv = x.data();
  std::vector<Acc> acc(sp.inner);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t l = 0; l < sp.len; ++l) {
      const T* row = xv.data() + (o * sp.len + l) * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) acc[i] += row[i];
    }
    for (std::size_t i = 0; i < sp.inner; ++i) y[o * sp.inner + i] = static_cast<T>(acc[i] / static_cast<Acc>(sp.len));
  }
  return Tensor<T>::make_result(drop_axis(x.shape(), axis), std::move(y), {x}, [sp](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    const T inv = T(1) / static_cast<T>(sp.len);
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t l = 0; l < sp.len; ++l) {
        T* row = g.data() + (o * sp.len + l) * sp.inner;
        for (std::size_t i = 0; i < sp.inner; ++i) row[i] += self.grad[o * sp.inner + i] * inv;
      }
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  Acc s = 0.0;
  for (T v : x.data()) s += v;
  return Tensor<T>::make_result({1}, {static_cast<T>(s)}, {x}, [](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  Acc s = 0.0;
  for (T v : x.data()) s += v;
  const std::size_t n = x.numel();
  return Tensor<T>::make_result({1}, {static_cast<T>(s / static_cast<Acc>(n))}, {x}, [n](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    const T share = self.grad[0] / static_cast<T>(n);
    for (auto& v : g) v += share;
  });
}

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  Shape out_shape = first;
  out_shape.at(axis) = 0;
  std::vector<std::size_t> lens;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) shape_error("concat", first, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) shape_error("concat", first, s);
    }
    lens.push_back(s[axis]);
    out_shape[axis] += s[axis];
  }
  const auto sp = split_axis(out_shape, axis);
  std::vector<T> y(numel(out_shape));
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const auto pv = parts[pi].data();
    const std::size_t chunk = lens[pi] * sp.inner;
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy_n(pv.data() + o * chunk, chunk, y.data() + o * sp.len * sp.inner + offset);
    }
    offset += chunk;
  }
  std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
  return Tensor<T>::make_result(out_shape, std::move(y), std::move(inputs), [sp, lens](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t pi = 0; pi < self.inputs.size(); ++pi) {
      const std::size_t chunk = lens[pi] * sp.inner;
      if (wants_grad(self.inputs[pi])) {
        auto g = self.inputs[pi]->grad_buffer();
        for (std::size_t o = 0; o < sp.outer; ++o) {
          const T* src = self.grad.data() + o * sp.len * sp.inner + off;
          T* dst = g.data() + o * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
      off += chunk;
    }
  });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> indices) {
  if (x.rank() < 1) throw ShapeError("gather_rows: rank-0 input");
  const std::size_t rows = x.dim(0);
  const std::size_t width = x.numel() / rows;
  Shape shape = x.shape();
  shape[0] = indices.size();
  std::vector<T> y(indices.size() * width);
  const auto xv = x.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) throw ShapeError("gather_rows: index " + std::to_string(indices[i]) + " out of range for " + to_string(x.shape()));
    std::copy_n(xv.data() + indices[i] * width, width, y.data() + i * width);
  }
  auto idx = std::make_shared<std::vector<std::size_t>>(indices.begin(), indices.end());
  return Tensor<T>::make_result(std::move(shape), std::move(y), {x}, [idx, width](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < idx->size(); ++i) {
      T* dst = g.data() + (*idx)[i] * width;
      const T* src = self.grad.data() + i * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.numel()) shape_error("reshape", x.shape(), shape);
  std::vector<T> y(x.data().begin(), x.data().end());
  return Tensor<T>::make_result(std::move(shape), std::move(y), {x}, [](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    shape_error("cross_entropy", logits.shape(), Shape{labels.size()});
  }
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  auto probs = std::make_shared<std::vector<T>>(n * c);
  auto lab = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  const auto lv = logits.data();
  Acc loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= c) throw ShapeError("cross_entropy: label out of range");
    const T* row = lv.data() + r * c;
    const T mx = *std::max_element(row, row + c);
    Acc s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(static_cast<Acc>(row[j] - mx));
    const Acc lse = std::log(s) + mx;
    loss += lse - row[labels[r]];
    for (std::size_t j = 0; j < c; ++j) (*probs)[r * c + j] = static_cast<T>(std::exp(row[j] - lse));
  }
  return Tensor<T>::make_result({1}, {static_cast<T>(loss / static_cast<Acc>(n))}, {logits},
                                [probs, lab, n, c](Node<T>& self) {
    auto g = self.inputs[0]->grad_buffer();
    const T scale_v = self.grad[0] / static_cast<T>(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        const T target = static_cast<int>(j) == (*lab)[r] ? T(1) : T(0);
        g[r * c + j] += scale_v * ((*probs)[r * c + j] - target);
      }
    }
  });
}

#define HFBRI_INSTANTIATE_OPS(T)                                                                 \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> relu(const Tensor<T>&);                                                     \
  template Tensor<T> gelu(const Tensor<T>&);                                                     \
  template Tensor<T> softmax_lastdim(const Tensor<T>&);                                          \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);        \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                BatchNormStats<T>&, bool, T, T);                                 \
  template Tensor<T> dropout(const Tensor<T>&, T, bool, Rng&);                                   \
  template Tensor<T> max_over_axis(const Tensor<T>&, std::size_t);                               \
  template Tensor<T> mean_over_axis(const Tensor<T>&, std::size_t);                              \
  template Tensor<T> sum(const Tensor<T>&);                                                      \
  template Tensor<T> mean(const Tensor<T>&);                                                     \
  template Tensor<T> concat(std::span<const Tensor<T>>, std::size_t);                            \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                           \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>);

HFBRI_INSTANTIATE_OPS(float)
HFBRI_INSTANTIATE_OPS(double)

}  // namespace hfbri::adiff
