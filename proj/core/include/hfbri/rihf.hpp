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
#include <span>
#include <vector>

#include "hfbri/geom.hpp"
#include "hfbri/lra.hpp"
#include "hfbri/point_cloud.hpp"

namespace hfbri {

inline constexpr std::size_t kRilfWidth = 8;
inline constexpr std::size_t kRigfWidth = 5;

// Per-point local features, one row per ordered patch point. Columns:
// d_pxi, alpha0, alpha1, alpha2, phi, beta0, beta1, beta2.
struct RilfMatrix {
  std::size_t rows = 0;
  std::vector<double> values;  // rows x kRilfWidth

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * kRilfWidth, kRilfWidth);
  }
  double at(std::size_t r, std::size_t c) const { return values[r * kRilfWidth + c]; }
};

// Per-patch global features: d_p, d_pm, d_sm, alpha, beta.
struct RigfVector {
  std::array<double, kRigfWidth> values{};
};

namespace rilf_col {
inline constexpr std::size_t kDistance = 0;
inline constexpr std::size_t kAlpha0 = 1;
inline constexpr std::size_t kAlpha1 = 2;
inline constexpr std::size_t kAlpha2 = 3;
inline constexpr std::size_t kPhi = 4;
inline constexpr std::size_t kBeta0 = 5;
inline constexpr std::size_t kBeta1 = 6;
inline constexpr std::size_t kBeta2 = 7;
}  // namespace rilf_col

// Row i pairs ordered point i with its cyclic successor (the last row pairs
// with row 0). point_lras is indexed like patch_points, not like the ordering.
RilfMatrix compute_rilf(std::span<const Vec3> patch_points, const Vec3& reference,
                        const Lra& reference_lra, std::span<const Lra> point_lras,
                        std::span<const std::size_t> ordering);

// Neighborhood-ball features. The ball is centered on the reference with the
// radius of the farthest patch point; m is the arithmetic mean of the patch
// and s the far intersection of the ball with the ray from the origin
// through the reference.
RigfVector compute_rigf(std::span<const Vec3> patch_points, const Vec3& reference);

// Column groups that the ablation sweep can zero out.
enum class RilfGroup { kDistance, kReferenceAngles, kNeighborAngles };

std::string_view group_name(RilfGroup g);
RilfGroup parse_group(std::string_view name);

struct FeatureOptions {
  // Neighbors used for each point's own LRA; 0 means the patch size.
  std::size_t lra_neighbors = 0;
  // Below this |axis . direction| the LRA sign falls back to the direction
  // from the cloud centroid.
  double sign_threshold = 1e-5;
  std::vector<RilfGroup> dropped_groups;
};

struct CloudFeatures {
  std::vector<RilfMatrix> rilf;   // one per patch, patch order
  std::vector<RigfVector> rigf;
  // Per patch, the cloud index of the point behind each RILF row.
  std::vector<std::vector<std::size_t>> point_ids;
  // Per patch: smallest distance of any discrete decision (LRA sign, eigen
  // gap, ordering, triple-product sign) from its switching point. Patches
  // with tiny margins are not guaranteed to be bit-stable under rotation.
  std::vector<double> margins;

  double min_margin() const;
};

CloudFeatures extract_features(const PointCloud& cloud, const PatchSet& patches,
                               const FeatureOptions& options = {});

}  // namespace hfbri
