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
#include <cmath>
#include <numbers>
#include <string>

#include "hfbri/error.hpp"
#include "hfbri/point_cloud.hpp"
#include "hfbri/rng.hpp"

namespace hfbri {
namespace {

using std::numbers::pi;

Vec3 unit_sphere_direction(Rng& rng) {
  while (true) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = norm(v);
    if (n > 1e-8) return v / n;
  }
}

void sample_sphere(Rng& rng, PointCloud& cloud, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points.push_back(unit_sphere_direction(rng) * synthetic::kSphereRadius);
  }
}

void sample_cube(Rng& rng, PointCloud& cloud, std::size_t n) {
  const double h = synthetic::kCubeHalfExtent;
  for (std::size_t i = 0; i < n; ++i) {
    const auto face = static_cast<int>(rng.below(6));
    const double u = rng.uniform(-h, h);
    const double v = rng.uniform(-h, h);
    const double w = (face % 2 == 0) ? h : -h;
    Vec3 p;
    switch (face / 2) {
      case 0:
        p = {w, u, v};
        break;
      case 1:
        p = {u, w, v};
        break;
      default:
        p = {u, v, w};
        break;
    }
    cloud.points.push_back(p);
  }
}

void sample_cylinder(Rng& rng, PointCloud& cloud, std::size_t n) {
  const double r = synthetic::kCylinderRadius;
  const double hh = synthetic::kCylinderHalfHeight;
  const double cap_area = pi * r * r;
  const double side_area = 2.0 * pi * r * (2.0 * hh);
  const double total = 2.0 * cap_area + side_area;
  std::vector<int> parts;
  parts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    const double theta = rng.uniform(0.0, 2.0 * pi);
    if (pick < 2.0 * cap_area) {
      // Area-uniform disk sample.
      const double rad = r * std::sqrt(rng.uniform());
      const bool top = pick >= cap_area;
      cloud.points.push_back({rad * std::cos(theta), rad * std::sin(theta), top ? hh : -hh});
      parts.push_back(top ? synthetic::kCylinderTopCap : synthetic::kCylinderBottomCap);
    } else {
      cloud.points.push_back({r * std::cos(theta), r * std::sin(theta), rng.uniform(-hh, hh)});
      parts.push_back(synthetic::kCylinderSide);
    }
  }
  cloud.part_labels = std::move(parts);
}

void sample_torus(Rng& rng, PointCloud& cloud, std::size_t n) {
  const double big = synthetic::kTorusMajorRadius;
  const double small = synthetic::kTorusMinorRadius;
  std::vector<int> parts;
  parts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform(0.0, 2.0 * pi);
    // The surface element is proportional to (R + r cos v); rejection-sample v.
    double v = 0.0;
    while (true) {
      v = rng.uniform(0.0, 2.0 * pi);
      if (rng.uniform() * (big + small) <= big + small * std::cos(v)) break;
    }
    const double ring = big + small * std::cos(v);
    cloud.points.push_back({ring * std::cos(u), ring * std::sin(u), small * std::sin(v)});
    parts.push_back(u < pi ? 0 : 1);
  }
  cloud.part_labels = std::move(parts);
}

void sample_cone(Rng& rng, PointCloud& cloud, std::size_t n) {
  const double r = synthetic::kConeBaseRadius;
  const double hh = synthetic::kConeHalfHeight;
  const double slant = std::sqrt(r * r + 4.0 * hh * hh);
  const double base_area = pi * r * r;
  const double lateral_area = pi * r * slant;
  std::vector<int> parts;
  parts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform() * (base_area + lateral_area);
    const double theta = rng.uniform(0.0, 2.0 * pi);
    if (pick < base_area) {
      const double rad = r * std::sqrt(rng.uniform());
      cloud.points.push_back({rad * std::cos(theta), rad * std::sin(theta), -hh});
      parts.push_back(0);
    } else {
      // Lateral area grows linearly with distance from the apex.
      const double t = std::sqrt(rng.uniform());
      cloud.points.push_back({t * r * std::cos(theta), t * r * std::sin(theta), hh - 2.0 * hh * t});
      parts.push_back(1);
    }
  }
  cloud.part_labels = std::move(parts);
}

}  // namespace

std::string_view shape_name(SyntheticShape shape) {
  switch (shape) {
    case SyntheticShape::kSphere:
      return "sphere";
    case SyntheticShape::kCube:
      return "cube";
    case SyntheticShape::kCylinder:
      return "cylinder";
    case SyntheticShape::kTorus:
      return "torus";
    case SyntheticShape::kCone:
      return "cone";
  }
  return "unknown";
}

SyntheticShape parse_shape(std::string_view name) {
  for (int i = 0; i < kSyntheticShapeCount; ++i) {
    const auto s = static_cast<SyntheticShape>(i);
    if (shape_name(s) == name) return s;
  }
  throw ConfigError("unknown synthetic shape '" + std::string(name) + "'");
}

PointCloud generate_synthetic(SyntheticShape shape, std::size_t n_points, std::uint64_t seed) {
  if (n_points < 8) throw SizeError("generate_synthetic needs at least 8 points");
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(shape), n_points}));
  PointCloud cloud;
  cloud.points.reserve(n_points);
  switch (shape) {
    case SyntheticShape::kSphere:
      sample_sphere(rng, cloud, n_points);
      break;
    case SyntheticShape::kCube:
      sample_cube(rng, cloud, n_points);
      break;
    case SyntheticShape::kCylinder:
      sample_cylinder(rng, cloud, n_points);
      break;
    case SyntheticShape::kTorus:
      sample_torus(rng, cloud, n_points);
      break;
    case SyntheticShape::kCone:
      sample_cone(rng, cloud, n_points);
      break;
  }
  cloud.label = static_cast<int>(shape);
  return cloud;
}

}  // namespace hfbri
