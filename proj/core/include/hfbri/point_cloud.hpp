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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hfbri/vec3.hpp"

namespace hfbri {

// Ordered 3D point set with optional class and per-point part labels.
struct PointCloud {
  std::vector<Vec3> points;
  std::optional<int> label;
  std::optional<std::vector<int>> part_labels;

  std::size_t size() const { return points.size(); }
  std::span<const Vec3> view() const { return points; }
};

// Throws DataError when the cloud is empty, holds a non-finite coordinate,
// or carries a part-label array of the wrong length.
void validate(const PointCloud& cloud);

enum class CloudFormat { kOff, kPlyAscii, kXyz };

CloudFormat format_from_extension(const std::filesystem::path& path);
CloudFormat parse_cloud_format(std::string_view name);

// Readers ignore faces and any non-coordinate vertex properties. Errors carry
// the offending line number.
PointCloud read_point_cloud(std::istream& in, CloudFormat format);
PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud load_point_cloud(const std::filesystem::path& path);

// Coordinates are printed with 17 significant digits, so a save/load cycle
// reproduces every double exactly.
void write_point_cloud(std::ostream& out, const PointCloud& cloud, CloudFormat format);
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                      CloudFormat format);

enum class SyntheticShape { kSphere = 0, kCube = 1, kCylinder = 2, kTorus = 3, kCone = 4 };

inline constexpr int kSyntheticShapeCount = 5;

std::string_view shape_name(SyntheticShape shape);
SyntheticShape parse_shape(std::string_view name);

// Surface dimensions of the synthetic shapes, in model units.
namespace synthetic {
inline constexpr double kSphereRadius = 1.0;
inline constexpr double kCubeHalfExtent = 1.0;
inline constexpr double kCylinderRadius = 0.5;
inline constexpr double kCylinderHalfHeight = 1.0;
inline constexpr double kTorusMajorRadius = 1.0;
inline constexpr double kTorusMinorRadius = 0.35;
inline constexpr double kConeBaseRadius = 0.8;
inline constexpr double kConeHalfHeight = 1.0;  // apex at +z

// Cylinder part ids; torus parts are 0 for azimuth in [0, pi) and 1 otherwise;
// cone parts are 0 for the base disk and 1 for the lateral surface.
inline constexpr int kCylinderBottomCap = 0;
inline constexpr int kCylinderTopCap = 1;
inline constexpr int kCylinderSide = 2;
}  // namespace synthetic

// Area-uniform surface sample. A pure function of its arguments; the class
// label is the shape index. Requires n_points >= 8.
PointCloud generate_synthetic(SyntheticShape shape, std::size_t n_points, std::uint64_t seed);

// Centroid to the origin and maximum norm to one. A cloud whose points all
// coincide maps to the origin.
PointCloud normalize_unit_sphere(const PointCloud& cloud);

Vec3 centroid(std::span<const Vec3> points);

}  // namespace hfbri
