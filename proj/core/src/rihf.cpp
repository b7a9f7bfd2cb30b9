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
#include "hfbri/rihf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>

#include "hfbri/error.hpp"

namespace hfbri {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Below this angle a sign flip of a signed LRA angle is numerically harmless.
constexpr double kSignedAngleFloor = 1e-7;

struct SignedAngle {
  double value = 0.0;
  double margin = kInf;
};

// S * angle(a, b) with S = sign((a x b) . v); S = +1 when the triple product
// is within kDegenerateNorm of zero. Result lies in (-pi, pi].
SignedAngle signed_angle(const Vec3& a, const Vec3& b, const Vec3& v) {
  SignedAngle out;
  const double angle = angle_between(a, b);
  const double triple = dot(cross(a, b), v);
  const double s = std::abs(triple) < kDegenerateNorm ? 1.0 : (triple < 0.0 ? -1.0 : 1.0);
  out.value = s * angle;
  if (out.value <= -std::numbers::pi) out.value = std::numbers::pi;
  if (angle > kSignedAngleFloor && v != Vec3{}) out.margin = std::abs(triple);
  return out;
}

RilfMatrix rilf_with_margin(std::span<const Vec3> pts, const Vec3& p, const Lra& lra_p,
                            std::span<const Lra> lras, std::span<const std::size_t> order,
                            double* margin) {
  const std::size_t k = order.size();
  RilfMatrix out;
  out.rows = k;
  out.values.assign(k * kRilfWidth, 0.0);
  double m = kInf;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    const std::size_t j = order[(r + 1) % k];
    const Vec3& xi = pts[i];
    const Vec3& xj = pts[j];
    const Vec3& li = lras[i].axis;
    const Vec3& lj = lras[j].axis;
    const Vec3 to_p = p - xi;         // x_i -> p
    const Vec3 next_to_p = p - xj;    // x_{i+1} -> p
    const Vec3 step = xj - xi;        // x_i -> x_{i+1}

    double* row = out.values.data() + r * kRilfWidth;
    row[rilf_col::kDistance] = norm(to_p);
    row[rilf_col::kAlpha0] = angle_between(li, to_p);
    row[rilf_col::kAlpha1] = angle_between(lra_p.axis, to_p);
    const auto a2 = signed_angle(li, lra_p.axis, to_p);
    row[rilf_col::kAlpha2] = a2.value;
    row[rilf_col::kPhi] = angle_between(next_to_p, to_p);
    row[rilf_col::kBeta0] = angle_between(li, step);
    row[rilf_col::kBeta1] = angle_between(lj, step);
    const auto b2 = signed_angle(li, lj, step);
    row[rilf_col::kBeta2] = b2.value;
    m = std::min({m, a2.margin, b2.margin});
  }
  if (margin) *margin = m;
  return out;
}

}  // namespace

RilfMatrix compute_rilf(std::span<const Vec3> patch_points, const Vec3& reference,
                        const Lra& reference_lra, std::span<const Lra> point_lras,
                        std::span<const std::size_t> ordering) {
  const std::size_t k = patch_points.size();
  if (point_lras.size() != k || ordering.size() != k) {
    throw SizeError("compute_rilf: patch, LRA and ordering sizes differ");
  }
  std::vector<bool> seen(k, false);
  for (std::size_t i : ordering) {
    if (i >= k || seen[i]) throw SizeError("compute_rilf: ordering is not a permutation");
    seen[i] = true;
  }
  return rilf_with_margin(patch_points, reference, reference_lra, point_lras, ordering, nullptr);
}

RigfVector compute_rigf(std::span<const Vec3> patch_points, const Vec3& reference) {
  if (patch_points.empty()) throw SizeError("compute_rigf: empty patch");
  const Vec3& p = reference;
  double r = 0.0;
  for (const auto& x : patch_points) r = std::max(r, distance(x, p));
  const Vec3 m = centroid(patch_points);
  const double dp = norm(p);
  const Vec3 s = dp < kDegenerateNorm ? p + Vec3{0.0, 0.0, r} : p * ((dp + r) / dp);

  RigfVector out;
  out.values[0] = dp;
  out.values[1] = distance(p, m);
  out.values[2] = distance(s, m);
  out.values[3] = angle_between(m - p, m - s);  // angle(p->m, s->m)
  out.values[4] = angle_between(s - p, s - m);  // angle(p->s, m->s)
  return out;
}

std::string_view group_name(RilfGroup g) {
  switch (g) {
    case RilfGroup::kDistance:
      return "distance";
    case RilfGroup::kReferenceAngles:
      return "reference_angles";
    case RilfGroup::kNeighborAngles:
      return "neighbor_angles";
  }
  return "unknown";
}

RilfGroup parse_group(std::string_view name) {
  for (auto g : {RilfGroup::kDistance, RilfGroup::kReferenceAngles, RilfGroup::kNeighborAngles}) {
    if (group_name(g) == name) return g;
  }
  throw ConfigError("unknown RILF group '" + std::string(name) +
                    "' (expected distance, reference_angles or neighbor_angles)");
}

double CloudFeatures::min_margin() const {
  double m = kInf;
  for (double v : margins) m = std::min(m, v);
  return m;
}

CloudFeatures extract_features(const PointCloud& cloud, const PatchSet& patches,
                               const FeatureOptions& options) {
  const auto pts = cloud.view();
  const std::size_t n = pts.size();
  const std::size_t k = patches.points_per_patch;
  for (std::size_t idx : patches.members) {
    if (idx >= n) throw SizeError("extract_features: patch index outside the cloud");
  }
  const std::size_t lra_k = std::min(options.lra_neighbors == 0 ? k : options.lra_neighbors, n);
  const Vec3 c = centroid(pts);

  // Unsigned axis per cloud point, computed on first use.
  std::unordered_map<std::size_t, AxisEstimate> axis_cache;
  auto axis_of = [&](std::size_t idx) -> const AxisEstimate& {
    auto it = axis_cache.find(idx);
    if (it != axis_cache.end()) return it->second;
    const auto nbrs = knn(pts, idx, lra_k);
    std::vector<Vec3> hood(nbrs.size());
    for (std::size_t i = 0; i < nbrs.size(); ++i) hood[i] = pts[nbrs[i]];
    return axis_cache.emplace(idx, estimate_axis(hood)).first->second;
  };

  CloudFeatures out;
  out.rilf.reserve(patches.n_patches());
  out.rigf.reserve(patches.n_patches());
  out.margins.reserve(patches.n_patches());

  std::vector<Vec3> patch_pts(k);
  std::vector<Lra> lras(k);
  for (std::size_t pi = 0; pi < patches.n_patches(); ++pi) {
    const auto row = patches.row(pi);
    const Vec3 p = pts[patches.centers[pi]];
    for (std::size_t j = 0; j < k; ++j) patch_pts[j] = pts[row[j]];

    double margin = kInf;
    const auto ref_est = estimate_axis(patch_pts);
    const auto ref = orient_with_fallback(ref_est, p - ref_est.mean, p - c, options.sign_threshold);
    margin = std::min(margin, ref.margin);

    for (std::size_t j = 0; j < k; ++j) {
      const auto& est = axis_of(row[j]);
      const auto o = orient_with_fallback(est, p - est.mean, patch_pts[j] - c,
                                          options.sign_threshold);
      lras[j] = o.lra;
      margin = std::min(margin, o.margin);
    }

    const auto ordering = order_patch_points_detailed(patch_pts, p, ref.lra);
    margin = std::min(margin, ordering.margin);

    double sign_margin = kInf;
    auto rilf = rilf_with_margin(patch_pts, p, ref.lra, lras, ordering.permutation, &sign_margin);
    margin = std::min(margin, sign_margin);

    for (auto g : options.dropped_groups) {
      std::size_t lo = 0;
      std::size_t hi = 0;
      switch (g) {
        case RilfGroup::kDistance:
          lo = rilf_col::kDistance;
          hi = rilf_col::kAlpha0;
          break;
        case RilfGroup::kReferenceAngles:
          lo = rilf_col::kAlpha0;
          hi = rilf_col::kPhi;
          break;
        case RilfGroup::kNeighborAngles:
          lo = rilf_col::kPhi;
          hi = kRilfWidth;
          break;
      }
      for (std::size_t r = 0; r < rilf.rows; ++r) {
        for (std::size_t col = lo; col < hi; ++col) rilf.values[r * kRilfWidth + col] = 0.0;
      }
    }

    std::vector<std::size_t> ids(k);
    for (std::size_t j = 0; j < k; ++j) ids[j] = row[ordering.permutation[j]];
    out.point_ids.push_back(std::move(ids));
    out.rilf.push_back(std::move(rilf));
    out.rigf.push_back(compute_rigf(patch_pts, p));
    out.margins.push_back(margin);
  }
  return out;
}

}  // namespace hfbri
