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
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hfbri/point_cloud.hpp"
#include "hfbri/vec3.hpp"

namespace hfbri {

// Proper rotation in SO(3), row-major.
struct Rotation {
  std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  static Rotation identity() { return {}; }
  static Rotation about_z(double angle);
  // Unit quaternion (w, x, y, z); normalized internally.
  static Rotation from_quaternion(double w, double x, double y, double z);

  Vec3 apply(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  Vec3 operator*(const Vec3& v) const { return apply(v); }

  double determinant() const;
  bool is_identity() const { return *this == identity(); }

  friend bool operator==(const Rotation&, const Rotation&) = default;
};

// Aligned, z-axis and uniform-SO(3) regimes.
enum class RotationSetting { kAligned, kZ, kRandom };

std::string_view setting_name(RotationSetting s);  // "A", "Z", "R"
RotationSetting parse_setting(std::string_view name);

// Deterministic in seed. kRandom samples a unit quaternion uniformly on S^3
// (Shoemake's subgroup algorithm), which is uniform on SO(3).
Rotation sample_rotation(RotationSetting setting, std::uint64_t seed);

PointCloud apply_rotation(const PointCloud& cloud, const Rotation& r);

// Greedy max-min selection starting at start_index. Distances are squared;
// ties go to the smallest index. Throws SizeError when count is 0 or > N.
std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t count,
                                               std::size_t start_index = 0);

// The k points closest to points[center_index], center included, sorted by
// (squared distance, index).
std::vector<std::size_t> knn(std::span<const Vec3> points, std::size_t center_index, std::size_t k);

// Same ordering as knn() but around an arbitrary query location.
std::vector<std::size_t> knn_of(std::span<const Vec3> points, const Vec3& query, std::size_t k);

// FPS centers plus a KNN neighborhood per center. Neighborhoods may overlap.
struct PatchSet {
  std::vector<std::size_t> centers;
  std::vector<std::size_t> members;  // n_patches() x points_per_patch, row-major
  std::size_t points_per_patch = 0;

  std::size_t n_patches() const { return centers.size(); }
  std::span<const std::size_t> row(std::size_t patch) const {
    return std::span<const std::size_t>(members).subspan(patch * points_per_patch,
                                                         points_per_patch);
  }
};

PatchSet patchify(std::span<const Vec3> points, std::size_t n_patches,
                  std::size_t points_per_patch, std::size_t start_index = 0);

}  // namespace hfbri
