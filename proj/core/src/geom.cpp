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
#include "hfbri/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hfbri/error.hpp"
#include "hfbri/rng.hpp"

namespace hfbri {

Rotation Rotation::about_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Rotation r;
  r.m = {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
  return r;
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Rotation r;
  r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
          {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
          {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
  return r;
}

double Rotation::determinant() const {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

std::string_view setting_name(RotationSetting s) {
  switch (s) {
    case RotationSetting::kAligned:
      return "A";
    case RotationSetting::kZ:
      return "Z";
    case RotationSetting::kRandom:
      return "R";
  }
  return "?";
}

RotationSetting parse_setting(std::string_view name) {
  if (name == "A") return RotationSetting::kAligned;
  if (name == "Z") return RotationSetting::kZ;
  if (name == "R") return RotationSetting::kRandom;
  throw ConfigError("unknown rotation setting '" + std::string(name) + "' (expected A, Z or R)");
}

Rotation sample_rotation(RotationSetting setting, std::uint64_t seed) {
  using std::numbers::pi;
  Rng rng(derive_seed(seed, {0x526f74ULL}));
  switch (setting) {
    case RotationSetting::kAligned:
      return Rotation::identity();
    case RotationSetting::kZ:
      return Rotation::about_z(rng.uniform(0.0, 2.0 * pi));
    case RotationSetting::kRandom: {
      const double u1 = rng.uniform();
      const double u2 = rng.uniform(0.0, 2.0 * pi);
      const double u3 = rng.uniform(0.0, 2.0 * pi);
      const double a = std::sqrt(1.0 - u1);
      const double b = std::sqrt(u1);
      return Rotation::from_quaternion(a * std::sin(u2), a * std::cos(u2), b * std::sin(u3),
                                       b * std::cos(u3));
    }
  }
  return Rotation::identity();
}

PointCloud apply_rotation(const PointCloud& cloud, const Rotation& r) {
  PointCloud out = cloud;
  if (r.is_identity()) return out;
  for (auto& p : out.points) p = r.apply(p);
  return out;
}

std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t count,
                                               std::size_t start_index) {
  const std::size_t n = points.size();
  if (count == 0 || count > n) {
    throw SizeError("farthest_point_sample: count " + std::to_string(count) + " not in [1, " +
                    std::to_string(n) + "]");
  }
  if (start_index >= n) throw SizeError("farthest_point_sample: start index out of range");

  std::vector<std::size_t> selected;
  selected.reserve(count);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::size_t current = start_index;
  for (std::size_t s = 0; s < count; ++s) {
    selected.push_back(current);
    min_dist[current] = -1.0;  // never selected again
    std::size_t best = n;
    double best_d = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (min_dist[i] < 0.0) continue;
      const double d = squared_distance(points[i], points[current]);
      if (d < min_dist[i]) min_dist[i] = d;
      // Strict comparison keeps the smallest index on ties.
      if (min_dist[i] > best_d) {
        best_d = min_dist[i];
        best = i;
      }
    }
    current = best;
  }
  return selected;
}

std::vector<std::size_t> knn_of(std::span<const Vec3> points, const Vec3& query, std::size_t k) {
  const std::size_t n = points.size();
  if (k == 0 || k > n) {
    throw SizeError("knn: k " + std::to_string(k) + " not in [1, " + std::to_string(n) + "]");
  }
  std::vector<std::pair<double, std::size_t>> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = {squared_distance(points[i], query), i};
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = order[i].second;
  return out;
}

std::vector<std::size_t> knn(std::span<const Vec3> points, std::size_t center_index,
                             std::size_t k) {
  if (center_index >= points.size()) throw SizeError("knn: center index out of range");
  auto out = knn_of(points, points[center_index], k);
  // The center is at distance zero but a coincident point with a smaller
  // index would sort first; membership of the center is still guaranteed
  // unless k duplicates precede it, in which case force it into the row.
  if (std::find(out.begin(), out.end(), center_index) == out.end()) {
    out.pop_back();
    out.insert(out.begin(), center_index);
  }
  return out;
}

PatchSet patchify(std::span<const Vec3> points, std::size_t n_patches,
                  std::size_t points_per_patch, std::size_t start_index) {
  PatchSet set;
  set.points_per_patch = points_per_patch;
  set.centers = farthest_point_sample(points, n_patches, start_index);
  set.members.reserve(n_patches * points_per_patch);
  for (std::size_t c : set.centers) {
    auto row = knn(points, c, points_per_patch);
    set.members.insert(set.members.end(), row.begin(), row.end());
  }
  return set;
}

}  // namespace hfbri
