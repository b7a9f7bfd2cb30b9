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
#include <set>
#include <sstream>

#include "gtest/gtest.h"
#include "hfbri/error.hpp"
#include "hfbri/point_cloud.hpp"

namespace hfbri {
namespace {

using namespace synthetic;

PointCloud read(const std::string& text, CloudFormat format) {
  std::istringstream in(text);
  return read_point_cloud(in, format);
}

TEST(PointCloudIoTest, OffKeepsVertexOrder) {
  const auto cloud = read("OFF\n3 0 0\n1 0 0\n0 1 0\n0 0 1\n", CloudFormat::kOff);
  ASSERT_EQ(cloud.size(), 3u);
  EXPECT_EQ(cloud.points[0], (Vec3{1, 0, 0}));
  EXPECT_EQ(cloud.points[2], (Vec3{0, 0, 1}));
}

TEST(PointCloudIoTest, OffIgnoresFaces) {
  const auto cloud = read("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n", CloudFormat::kOff);
  EXPECT_EQ(cloud.size(), 3u);
}

TEST(PointCloudIoTest, XyzReadsTriples) {
  const auto cloud = read("0 0 0\n1 2 3\n", CloudFormat::kXyz);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_EQ(cloud.points[1], (Vec3{1, 2, 3}));
}

TEST(PointCloudIoTest, PlyShortVertexListIsParseError) {
  const std::string ply =
      "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\n"
      "property float z\nend_header\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n";
  try {
    read(ply, CloudFormat::kPlyAscii);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.line(), 0u);
    EXPECT_NE(std::string(e.what()).find("vertex"), std::string::npos) << e.what();
  }
}

TEST(PointCloudIoTest, PlySkipsExtraProperties) {
  const std::string ply =
      "ply\nformat ascii 1.0\ncomment hi\nelement vertex 2\nproperty float nx\nproperty float x\n"
      "property float y\nproperty float z\nproperty uchar red\nelement face 0\n"
      "property list uchar int vertex_indices\nend_header\n9 1 2 3 255\n9 4 5 6 0\n";
  const auto cloud = read(ply, CloudFormat::kPlyAscii);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_EQ(cloud.points[0], (Vec3{1, 2, 3}));
  EXPECT_EQ(cloud.points[1], (Vec3{4, 5, 6}));
}

TEST(PointCloudIoTest, EmptyCloudIsRejected) {
  EXPECT_THROW(read("OFF\n0 0 0\n", CloudFormat::kOff), Error);
  EXPECT_THROW(read("", CloudFormat::kXyz), Error);
}

TEST(PointCloudIoTest, MalformedNumberReportsLine) {
  try {
    read("0 0 0\n1 x 3\n", CloudFormat::kXyz);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(PointCloudIoTest, NonFiniteCoordinateIsRejected) {
  EXPECT_THROW(read("0 0 nan\n", CloudFormat::kXyz), Error);
}

TEST(PointCloudIoTest, FormatFromExtension) {
  EXPECT_EQ(format_from_extension("a/b.off"), CloudFormat::kOff);
  EXPECT_EQ(format_from_extension("b.PLY"), CloudFormat::kPlyAscii);
  EXPECT_EQ(format_from_extension("b.xyz"), CloudFormat::kXyz);
  EXPECT_THROW(format_from_extension("b.obj"), Error);
}

TEST(RoundTripTest, SaveThenLoadReproducesCoordinatesInEveryFormat) {
  const auto cloud = generate_synthetic(SyntheticShape::kTorus, 64, 3);
  for (auto format : {CloudFormat::kOff, CloudFormat::kPlyAscii, CloudFormat::kXyz}) {
    SCOPED_TRACE(static_cast<int>(format));
    std::stringstream buf;
    write_point_cloud(buf, cloud, format);
    const auto back = read_point_cloud(buf, format);
    ASSERT_EQ(back.size(), cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      EXPECT_NEAR(back.points[i].x, cloud.points[i].x, 1e-12);
      EXPECT_NEAR(back.points[i].y, cloud.points[i].y, 1e-12);
      EXPECT_NEAR(back.points[i].z, cloud.points[i].z, 1e-12);
    }
  }
}

TEST(SyntheticTest, DeterministicInSeed) {
  const auto a = generate_synthetic(SyntheticShape::kSphere, 100, 7);
  const auto b = generate_synthetic(SyntheticShape::kSphere, 100, 7);
  EXPECT_EQ(a.points, b.points);
  const auto c = generate_synthetic(SyntheticShape::kSphere, 100, 8);
  EXPECT_NE(a.points, c.points);
}

TEST(SyntheticTest, SpherePointsLieOnSurface) {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    for (const auto& p : generate_synthetic(SyntheticShape::kSphere, 1000, seed).points) {
      EXPECT_NEAR(norm(p), kSphereRadius, 1e-9);
    }
  }
}

TEST(SyntheticTest, CylinderHasThreeParts) {
  const auto cloud = generate_synthetic(SyntheticShape::kCylinder, 1000, 1);
  ASSERT_TRUE(cloud.part_labels.has_value());
  EXPECT_EQ(std::set<int>(cloud.part_labels->begin(), cloud.part_labels->end()).size(), 3u);
}

TEST(SyntheticTest, TorusHasTwoHalves) {
  const auto cloud = generate_synthetic(SyntheticShape::kTorus, 1000, 1);
  ASSERT_TRUE(cloud.part_labels.has_value());
  EXPECT_EQ(std::set<int>(cloud.part_labels->begin(), cloud.part_labels->end()).size(), 2u);
}

TEST(SyntheticTest, LabelIsShapeIndex) {
  for (int s = 0; s < kSyntheticShapeCount; ++s) {
    const auto shape = static_cast<SyntheticShape>(s);
    const auto cloud = generate_synthetic(shape, 32, 5);
    ASSERT_TRUE(cloud.label.has_value());
    EXPECT_EQ(*cloud.label, s);
    EXPECT_EQ(parse_shape(shape_name(shape)), shape);
    EXPECT_NO_THROW(validate(cloud));
  }
}

TEST(SyntheticTest, SurfaceConstraints) {
  for (const auto& p : generate_synthetic(SyntheticShape::kCube, 500, 4).points) {
    const double m = std::max({std::abs(p.x), std::abs(p.y), std::abs(p.z)});
    EXPECT_NEAR(m, kCubeHalfExtent, 1e-12);
  }
  for (const auto& p : generate_synthetic(SyntheticShape::kTorus, 500, 4).points) {
    const double ring = std::hypot(p.x, p.y) - kTorusMajorRadius;
    EXPECT_NEAR(std::hypot(ring, p.z), kTorusMinorRadius, 1e-9);
  }
}

TEST(SyntheticTest, TooFewPointsRejected) {
  EXPECT_THROW(generate_synthetic(SyntheticShape::kSphere, 7, 1), Error);
}

TEST(NormalizeTest, KnownPair) {
  PointCloud c;
  c.points = {{0, 0, 0}, {2, 0, 0}};
  const auto n = normalize_unit_sphere(c);
  EXPECT_NEAR(n.points[0].x, -1.0, 1e-12);
  EXPECT_NEAR(n.points[1].x, 1.0, 1e-12);
}

TEST(NormalizeTest, CoincidentPointsMapToOrigin) {
  PointCloud c;
  c.points.assign(4, Vec3{5, 5, 5});
  for (const auto& p : normalize_unit_sphere(c).points) EXPECT_EQ(p, (Vec3{0, 0, 0}));
}

TEST(NormalizeTest, CenteredUnitCloudUnchanged) {
  PointCloud c;
  c.points = {{1, 0, 0}, {-1, 0, 0}, {0, 0.5, 0}, {0, -0.5, 0}};
  const auto n = normalize_unit_sphere(c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(n.points[i].x, c.points[i].x, 1e-12);
    EXPECT_NEAR(n.points[i].y, c.points[i].y, 1e-12);
  }
}

TEST(NormalizeTest, CentroidZeroMaxNormOneAndIdempotent) {
  for (int s = 0; s < kSyntheticShapeCount; ++s) {
    auto c = generate_synthetic(static_cast<SyntheticShape>(s), 300, 11);
    for (auto& p : c.points) p = p * 3.0 + Vec3{1, -2, 0.5};
    const auto once = normalize_unit_sphere(c);
    const auto mid = centroid(once.points);
    EXPECT_NEAR(norm(mid), 0.0, 1e-9);
    double max_norm = 0.0;
    for (const auto& p : once.points) max_norm = std::max(max_norm, norm(p));
    EXPECT_NEAR(max_norm, 1.0, 1e-9);
    const auto twice = normalize_unit_sphere(once);
    for (std::size_t i = 0; i < once.size(); ++i) {
      EXPECT_NEAR(norm(twice.points[i] - once.points[i]), 0.0, 1e-9);
    }
  }
}

}  // namespace
}  // namespace hfbri
