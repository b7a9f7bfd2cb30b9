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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hfbri/vec3.hpp"

namespace hfbri {

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Eigen-decomposition of a real symmetric 3x3 matrix by cyclic Jacobi
// rotations. Values ascend; vectors[i] pairs with values[i]. Equal values keep
// the order in which the sweep produced them, so the zero matrix yields the
// coordinate axes in x, y, z order.
struct SymmetricEigen {
  std::array<double, 3> values{};
  std::array<Vec3, 3> vectors{};
};

SymmetricEigen eigen_symmetric(const Matrix3& a);

// Unweighted covariance about the mean (divides by M).
Matrix3 covariance(std::span<const Vec3> points, const Vec3& mean);

// Local reference axis: unit normal surrogate of a neighborhood.
struct Lra {
  Vec3 axis{0.0, 0.0, 1.0};
};

// Unsigned axis estimate before sign disambiguation.
struct AxisEstimate {
  Vec3 axis;   // smallest-eigenvalue eigenvector, unit length
  Vec3 mean;   // neighborhood mean
  double relative_gap = 0.0;  // (lambda1 - lambda0) / lambda2, 0 when degenerate
};

// Eigenvector of the smallest covariance eigenvalue. Among eigenvalues tied
// with the smallest (within 1e-9 relative to the largest) the last one in
// ascending order is chosen. Throws SizeError on an empty neighborhood.
AxisEstimate estimate_axis(std::span<const Vec3> neighborhood);

// Dot products with magnitude at most this are treated as zero by the basic
// sign rule.
inline constexpr double kSignZero = 1e-12;

// Flips the axis so that axis . direction >= 0. When |axis . direction| is
// within kSignZero of zero the first component with magnitude above
// kSignZero is made positive instead.
Vec3 orient_by_direction(const Vec3& axis, const Vec3& direction);

// compute_lra: estimate_axis + orient_by_direction(anchor - mean).
Lra compute_lra(std::span<const Vec3> neighborhood, const Vec3& anchor);

// Sign disambiguation used by the feature pipeline. The primary direction
// decides unless its projection on the axis is below `threshold`, in which
// case the fallback direction decides under the same rule; if both are
// below threshold the basic rule applies to the primary direction.
// `margin` is the distance of the deciding quantities from their switching
// points; 0 marks a decision that is not stable under rotation.
struct OrientedLra {
  Lra lra;
  double margin = 0.0;
};

OrientedLra orient_with_fallback(const AxisEstimate& estimate, const Vec3& primary_direction,
                                 const Vec3& fallback_direction, double threshold);

// Tangent-plane ordering of a patch around `reference`. Position 0 is the
// point farthest from the reference (ties by index). The others follow in
// clockwise order as seen from the tip of the axis looking back at the
// reference plane: psi_i = atan2((u_i x u_0) . n, u_i . u_0) mapped to
// [0, 2 pi), sorted ascending with ties by index. Points whose projected
// offset is shorter than kDegenerateNorm go last in index order.
std::vector<std::size_t> order_patch_points(std::span<const Vec3> patch_points,
                                            const Vec3& reference, const Lra& reference_lra);

struct PatchOrdering {
  std::vector<std::size_t> permutation;
  // Smallest gap between competing quantities (distance tie for position 0,
  // angular gaps, wrap-around distance); +inf when nothing can flip.
  double margin = 0.0;
};

PatchOrdering order_patch_points_detailed(std::span<const Vec3> patch_points,
                                          const Vec3& reference, const Lra& reference_lra);

}  // namespace hfbri
