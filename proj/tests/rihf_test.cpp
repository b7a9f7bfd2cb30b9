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
#include <numbers>

#include "gtest/gtest.h"
#include "hfbri/error.hpp"
#include "hfbri/rihf.hpp"
#include "test_util.hpp"

namespace hfbri {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(RilfTest, PerpendicularNeighborWithEqualAxes) {
  const std::vector<Vec3> patch{{1, 0, 0}};
  const std::vector<Lra> lras{Lra{{0, 0, 1}}};
  const std::vector<std::size_t> order{0};
  const auto m = compute_rilf(patch, {0, 0, 0}, Lra{{0, 0, 1}}, lras, order);
  ASSERT_EQ(m.rows, 1u);
  EXPECT_DOUBLE_EQ(m.at(0, rilf_col::kDistance), 1.0);
  EXPECT_NEAR(m.at(0, rilf_col::kAlpha0), kPi / 2, 1e-15);
  EXPECT_NEAR(m.at(0, rilf_col::kAlpha1), kPi / 2, 1e-15);
  EXPECT_EQ(m.at(0, rilf_col::kAlpha2), 0.0);
  // Self-pairing: the successor is the point itself.
  EXPECT_EQ(m.at(0, rilf_col::kPhi), 0.0);
  EXPECT_EQ(m.at(0, rilf_col::kBeta0), 0.0);
  EXPECT_EQ(m.at(0, rilf_col::kBeta1), 0.0);
  EXPECT_EQ(m.at(0, rilf_col::kBeta2), 0.0);
}

TEST(RilfTest, CoincidentPointZeroesReferenceAngles) {
  const std::vector<Vec3> patch{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Lra> lras{Lra{{0, 0, 1}}, Lra{{0, 1, 0}}};
  const std::vector<std::size_t> order{1, 0};
  const auto m = compute_rilf(patch, {0, 0, 0}, Lra{{1, 0, 0}}, lras, order);
  // Row 1 is the coincident point.
  EXPECT_EQ(m.at(1, rilf_col::kDistance), 0.0);
  EXPECT_EQ(m.at(1, rilf_col::kAlpha0), 0.0);
  EXPECT_EQ(m.at(1, rilf_col::kAlpha1), 0.0);
  EXPECT_NEAR(std::abs(m.at(1, rilf_col::kAlpha2)), kPi / 2, 1e-15);
  EXPECT_EQ(m.at(1, rilf_col::kPhi), 0.0);
}

TEST(RilfTest, SignedAnglesFollowTripleProduct) {
  // x_i -> p = (-1,0,0). LRA_x = +z, LRA_p = +y: (z x y) . (-x) = +1.
  const std::vector<Vec3> patch{{1, 0, 0}};
  const std::vector<Lra> lras{Lra{{0, 0, 1}}};
  const std::vector<std::size_t> order{0};
  const auto pos = compute_rilf(patch, {0, 0, 0}, Lra{{0, 1, 0}}, lras, order);
  EXPECT_NEAR(pos.at(0, rilf_col::kAlpha2), kPi / 2, 1e-15);
  const auto neg = compute_rilf(patch, {0, 0, 0}, Lra{{0, -1, 0}}, lras, order);
  EXPECT_NEAR(neg.at(0, rilf_col::kAlpha2), -kPi / 2, 1e-15);
}

TEST(RilfTest, CyclicSuccessor) {
  // Three points on a square around the origin; last row pairs with row 0.
  const std::vector<Vec3> patch{{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}};
  const std::vector<Lra> lras(3, Lra{{0, 0, 1}});
  const std::vector<std::size_t> order{0, 1, 2};
  const auto m = compute_rilf(patch, {0, 0, 0}, Lra{{0, 0, 1}}, lras, order);
  EXPECT_NEAR(m.at(0, rilf_col::kPhi), kPi / 2, 1e-15);
  EXPECT_NEAR(m.at(1, rilf_col::kPhi), kPi / 2, 1e-15);
  EXPECT_NEAR(m.at(2, rilf_col::kPhi), kPi, 1e-15);
}

TEST(RigfTest, HandEvaluatedExample) {
  const std::vector<Vec3> patch{{2, 0, 0}, {3, 0, 0}};
  const auto g = compute_rigf(patch, {2, 0, 0}).values;
  EXPECT_NEAR(g[0], 2.0, 1e-15);
  EXPECT_NEAR(g[1], 0.5, 1e-15);
  EXPECT_NEAR(g[2], 0.5, 1e-15);
  EXPECT_NEAR(g[3], kPi, 1e-15);
  EXPECT_NEAR(g[4], 0.0, 1e-15);
}

TEST(RigfTest, SymmetricPatchAboutReference) {
  const Vec3 p{0.5, 0.5, 0};
  const std::vector<Vec3> patch{p, p + Vec3{0.2, 0, 0}, p - Vec3{0.2, 0, 0}};
  const auto g = compute_rigf(patch, p).values;
  EXPECT_NEAR(g[1], 0.0, 1e-15);
  EXPECT_EQ(g[3], 0.0);
  EXPECT_NEAR(g[2], 0.2, 1e-15);
  EXPECT_NEAR(g[4], 0.0, 1e-15);
}

TEST(RigfTest, ReferenceAtOriginUsesZOffset) {
  const std::vector<Vec3> patch{{0, 0, 0}, {1, 0, 0}};
  const auto g = compute_rigf(patch, {0, 0, 0}).values;
  // m = (0.5,0,0), s = (0,0,1).
  EXPECT_EQ(g[0], 0.0);
  EXPECT_NEAR(g[1], 0.5, 1e-15);
  EXPECT_NEAR(g[2], std::sqrt(1.25), 1e-15);
}

TEST(RigfTest, OnePointPatchHasZeroRadius) {
  const std::vector<Vec3> patch{{1, 1, 0}};
  const auto g = compute_rigf(patch, patch[0]).values;
  EXPECT_NEAR(g[0], std::sqrt(2.0), 1e-15);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[2], 0.0);
}

PointCloud random_cloud(std::uint64_t seed, std::size_t n = 256) {
  const auto shape = static_cast<SyntheticShape>(seed % kSyntheticShapeCount);
  return normalize_unit_sphere(generate_synthetic(shape, n, seed));
}

TEST(ExtractTest, ShapesAndPointIds) {
  const auto cloud = random_cloud(1);
  const auto patches = patchify(cloud.view(), 32, 16);
  const auto f = extract_features(cloud, patches);
  ASSERT_EQ(f.rilf.size(), 32u);
  ASSERT_EQ(f.rigf.size(), 32u);
  for (std::size_t p = 0; p < 32; ++p) {
    EXPECT_EQ(f.rilf[p].rows, 16u);
    EXPECT_EQ(f.rilf[p].values.size(), 16u * kRilfWidth);
    ASSERT_EQ(f.point_ids[p].size(), 16u);
    // Row distances match the recorded source point.
    const Vec3 ref = cloud.points[patches.centers[p]];
    for (std::size_t r = 0; r < 16; ++r) {
      EXPECT_NEAR(f.rilf[p].at(r, rilf_col::kDistance), distance(cloud.points[f.point_ids[p][r]], ref), 1e-15);
    }
  }
}

TEST(ExtractTest, OnePointPatches) {
  const auto cloud = random_cloud(2, 32);
  const auto f = extract_features(cloud, patchify(cloud.view(), 8, 1));
  for (std::size_t p = 0; p < 8; ++p) {
    for (double v : f.rilf[p].values) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(f.rigf[p].values[2], 0.0);  // r = 0 puts s on m
  }
}

TEST(ExtractTest, RangeInvariants) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto cloud = random_cloud(s);
    const auto f = extract_features(cloud, patchify(cloud.view(), 32, 16));
    for (const auto& m : f.rilf) {
      for (std::size_t r = 0; r < m.rows; ++r) {
        EXPECT_GE(m.at(r, 0), 0.0);
        for (auto c : {rilf_col::kAlpha0, rilf_col::kAlpha1, rilf_col::kPhi, rilf_col::kBeta0, rilf_col::kBeta1}) {
          EXPECT_GE(m.at(r, c), 0.0);
          EXPECT_LE(m.at(r, c), kPi);
        }
        for (auto c : {rilf_col::kAlpha2, rilf_col::kBeta2}) {
          EXPECT_GT(m.at(r, c), -kPi);
          EXPECT_LE(m.at(r, c), kPi);
        }
      }
    }
    for (const auto& g : f.rigf) {
      for (int i = 0; i < 3; ++i) EXPECT_GE(g.values[i], 0.0);
      for (int i = 3; i < 5; ++i) {
        EXPECT_GE(g.values[i], 0.0);
        EXPECT_LE(g.values[i], kPi);
      }
    }
  }
}

TEST(ExtractTest, RotationInvariantAfterMarginFilter) {
  int compared = 0;
  int filtered = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto cloud = random_cloud(100 + s);
    const auto patches = patchify(cloud.view(), 32, 16);
    const auto base = extract_features(cloud, patches);
    for (std::uint64_t t = 0; t < 5; ++t) {
      const auto rot = sample_rotation(RotationSetting::kRandom, derive_seed(s, {t}));
      const auto rc = apply_rotation(cloud, rot);
      const auto f = extract_features(rc, patchify(rc.view(), 32, 16));
      for (std::size_t p = 0; p < base.rilf.size(); ++p) {
        if (base.margins[p] < 1e-6) {
          ++filtered;
          continue;
        }
        ++compared;
        for (std::size_t i = 0; i < base.rilf[p].values.size(); ++i) {
          ASSERT_NEAR(f.rilf[p].values[i], base.rilf[p].values[i], 1e-6) << "patch " << p;
        }
        for (std::size_t i = 0; i < kRigfWidth; ++i) {
          ASSERT_NEAR(f.rigf[p].values[i], base.rigf[p].values[i], 1e-6);
        }
      }
    }
  }
  EXPECT_GT(compared, 10 * filtered);
}

TEST(ExtractTest, NotTranslationInvariant) {
  const auto cloud = random_cloud(3);
  auto shifted = cloud;
  for (auto& p : shifted.points) p += Vec3{0.5, 0, 0};
  const auto a = extract_features(cloud, patchify(cloud.view(), 8, 16));
  const auto b = extract_features(shifted, patchify(shifted.view(), 8, 16));
  EXPECT_NE(a.rigf[0].values[0], b.rigf[0].values[0]);
}

TEST(ExtractTest, DroppedGroupsAreZero) {
  const auto cloud = random_cloud(4);
  const auto patches = patchify(cloud.view(), 8, 16);
  const auto full = extract_features(cloud, patches);
  FeatureOptions opts;
  opts.dropped_groups = {RilfGroup::kReferenceAngles};
  const auto f = extract_features(cloud, patches, opts);
  for (std::size_t p = 0; p < 8; ++p) {
    for (std::size_t r = 0; r < 16; ++r) {
      EXPECT_EQ(f.rilf[p].at(r, rilf_col::kDistance), full.rilf[p].at(r, rilf_col::kDistance));
      for (auto c : {rilf_col::kAlpha0, rilf_col::kAlpha1, rilf_col::kAlpha2}) EXPECT_EQ(f.rilf[p].at(r, c), 0.0);
      EXPECT_EQ(f.rilf[p].at(r, rilf_col::kBeta2), full.rilf[p].at(r, rilf_col::kBeta2));
    }
  }
  opts.dropped_groups = {RilfGroup::kDistance, RilfGroup::kReferenceAngles, RilfGroup::kNeighborAngles};
  for (const auto& m : extract_features(cloud, patches, opts).rilf) {
    for (double v : m.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(ExtractTest, GroupNames) {
  for (auto g : {RilfGroup::kDistance, RilfGroup::kReferenceAngles, RilfGroup::kNeighborAngles}) {
    EXPECT_EQ(parse_group(group_name(g)), g);
  }
  EXPECT_THROW(parse_group("colors"), ConfigError);
}

}  // namespace
}  // namespace hfbri
