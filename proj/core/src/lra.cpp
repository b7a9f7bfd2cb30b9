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
#include "hfbri/lra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "hfbri/error.hpp"
#include "hfbri/point_cloud.hpp"

namespace hfbri {

SymmetricEigen eigen_symmetric(const Matrix3& input) {
  Matrix3 a = input;
  Matrix3 v{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    const double diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
    if (off == 0.0 || off <= 1e-36 * diag) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J for the Givens rotation J in the (p, q) plane.
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        a[p][q] = a[q][p] = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, 3> idx{0, 1, 2};
  std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return a[i][i] < a[j][j]; });
  SymmetricEigen out;
  for (int i = 0; i < 3; ++i) {
    const int c = idx[i];
    out.values[i] = a[c][c];
    Vec3 col{v[0][c], v[1][c], v[2][c]};
    out.vectors[i] = col / norm(col);
  }
  return out;
}

Matrix3 covariance(std::span<const Vec3> points, const Vec3& mean) {
  Matrix3 c{};
  for (const auto& p : points) {
    const Vec3 d = p - mean;
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) c[i][j] += d[i] * d[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(points.size());
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      c[i][j] *= inv;
      c[j][i] = c[i][j];
    }
  }
  return c;
}

AxisEstimate estimate_axis(std::span<const Vec3> neighborhood) {
  if (neighborhood.empty()) throw SizeError("compute_lra: empty neighborhood");
  AxisEstimate est;
  est.mean = centroid(neighborhood);
  const auto eig = eigen_symmetric(covariance(neighborhood, est.mean));
  const double scale = std::max(std::abs(eig.values[2]), std::numeric_limits<double>::min());
  int chosen = 0;
  for (int i = 1; i < 3; ++i) {
    if (eig.values[i] - eig.values[0] <= 1e-9 * scale) chosen = i;
  }
  est.axis = eig.vectors[chosen];
  est.relative_gap = chosen == 0 ? (eig.values[1] - eig.values[0]) / scale : 0.0;
  return est;
}

Vec3 orient_by_direction(const Vec3& axis, const Vec3& direction) {
  const double d = dot(axis, direction);
  if (std::abs(d) > kSignZero) return d < 0.0 ? -axis : axis;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis[i]) > kSignZero) return axis[i] < 0.0 ? -axis : axis;
  }
  return axis;
}

Lra compute_lra(std::span<const Vec3> neighborhood, const Vec3& anchor) {
  const auto est = estimate_axis(neighborhood);
  return Lra{orient_by_direction(est.axis, anchor - est.mean)};
}

OrientedLra orient_with_fallback(const AxisEstimate& estimate, const Vec3& primary_direction,
                                 const Vec3& fallback_direction, double threshold) {
  OrientedLra out;
  const double d1 = dot(estimate.axis, primary_direction);
  double margin = estimate.relative_gap;
  if (std::abs(d1) >= threshold) {
    out.lra.axis = d1 < 0.0 ? -estimate.axis : estimate.axis;
    margin = std::min(margin, std::abs(d1) - threshold);
  } else {
    const double d2 = dot(estimate.axis, fallback_direction);
    margin = std::min(margin, threshold - std::abs(d1));
    if (std::abs(d2) >= threshold) {
      out.lra.axis = d2 < 0.0 ? -estimate.axis : estimate.axis;
      margin = std::min(margin, std::abs(d2) - threshold);
    } else {
      out.lra.axis = orient_by_direction(estimate.axis, primary_direction);
      margin = 0.0;
    }
  }
  out.margin = margin;
  return out;
}

PatchOrdering order_patch_points_detailed(std::span<const Vec3> pts, const Vec3& reference,
                                          const Lra& reference_lra) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const std::size_t k = pts.size();
  PatchOrdering out;
  out.margin = std::numeric_limits<double>::infinity();
  if (k == 0) return out;

  std::vector<double> dist(k);
  for (std::size_t i = 0; i < k; ++i) dist[i] = distance(pts[i], reference);
  std::size_t first = 0;
  for (std::size_t i = 1; i < k; ++i) {
    if (dist[i] > dist[first]) first = i;
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (i != first) out.margin = std::min(out.margin, dist[first] - dist[i]);
  }

  const Vec3& n = reference_lra.axis;
  std::vector<Vec3> proj(k);
  std::vector<bool> degenerate(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    const Vec3 o = pts[i] - reference;
    const Vec3 t = o - n * dot(o, n);
    const double len = norm(t);
    if (len < kDegenerateNorm) {
      degenerate[i] = true;
      // An exact zero offset is degenerate in every frame.
      if (o != Vec3{}) out.margin = std::min(out.margin, len);
    } else {
      proj[i] = t / len;
      out.margin = std::min(out.margin, len);
    }
  }

  // Angular origin: the farthest point, or the farthest point with a usable
  // projection when the farthest one sits on the axis.
  std::size_t ref_dir = k;
  if (!degenerate[first]) {
    ref_dir = first;
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      if (!degenerate[i] && (ref_dir == k || dist[i] > dist[ref_dir])) ref_dir = i;
    }
  }

  std::vector<std::pair<double, std::size_t>> angular;
  std::vector<std::size_t> tail;
  for (std::size_t i = 0; i < k; ++i) {
    if (i == first) continue;
    if (degenerate[i] || ref_dir == k) {
      tail.push_back(i);
      continue;
    }
    const Vec3& u0 = proj[ref_dir];
    double psi = std::atan2(dot(cross(proj[i], u0), n), dot(proj[i], u0));
    if (psi < 0.0) psi += kTwoPi;
    if (i != ref_dir) out.margin = std::min(out.margin, std::min(psi, kTwoPi - psi));
    angular.emplace_back(psi, i);
  }
  std::sort(angular.begin(), angular.end());
  for (std::size_t j = 1; j < angular.size(); ++j) {
    out.margin = std::min(out.margin, angular[j].first - angular[j - 1].first);
  }

  out.permutation.reserve(k);
  out.permutation.push_back(first);
  for (const auto& [psi, i] : angular) out.permutation.push_back(i);
  out.permutation.insert(out.permutation.end(), tail.begin(), tail.end());
  return out;
}

std::vector<std::size_t> order_patch_points(std::span<const Vec3> patch_points,
                                            const Vec3& reference, const Lra& reference_lra) {
  return order_patch_points_detailed(patch_points, reference, reference_lra).permutation;
}

}  // namespace hfbri
