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
#include "hfbri/mae/chamfer.hpp"
#include "hfbri/mae/checkpoint.hpp"
#include "hfbri/mae/config.hpp"
#include "hfbri/mae/heads.hpp"
#include "hfbri/mae/model.hpp"
#include "hfbri/mae/pipeline.hpp"
#include "test_util.hpp"

namespace hfbri::mae {
namespace {

using adiff::Shape;
using adiff::Tensor;
using hfbri::testing::max_gradient_error;
using hfbri::testing::random_points;
using hfbri::testing::random_tensor;

ModelConfig tiny_config() {
  ModelConfig c = ModelConfig::desk();
  c.embed_dim = 16;
  c.encoder_blocks = 2;
  c.decoder_blocks = 1;
  c.heads = 2;
  c.n_patches = 8;
  c.points_per_patch = 8;
  return c;
}

PointCloud cloud_for(std::uint64_t seed, std::size_t n = 128) {
  const auto shape = static_cast<SyntheticShape>(seed % 4);
  return normalize_unit_sphere(generate_synthetic(shape, n, seed));
}

std::vector<const PreparedCloud*> ptrs(const std::vector<PreparedCloud>& v) {
  std::vector<const PreparedCloud*> out;
  for (const auto& p : v) out.push_back(&p);
  return out;
}

// ---- config ----

TEST(ConfigTest, DeskAndFullDefaults) {
  const auto d = ModelConfig::desk();
  EXPECT_EQ(d.embed_dim, 64u);
  EXPECT_EQ(d.encoder_blocks, 3u);
  EXPECT_EQ(d.decoder_blocks, 2u);
  EXPECT_EQ(d.heads, 4u);
  EXPECT_EQ(d.n_patches, 32u);
  EXPECT_EQ(d.points_per_patch, 16u);
  const auto p = ModelConfig::full();
  EXPECT_EQ(p.embed_dim, 384u);
  EXPECT_EQ(p.encoder_blocks, 12u);
  EXPECT_EQ(p.decoder_blocks, 4u);
  EXPECT_EQ(p.heads, 8u);
  EXPECT_EQ(p.n_patches, 256u);
  EXPECT_EQ(p.points_per_patch, 64u);
  EXPECT_DOUBLE_EQ(p.mask_ratio, 0.6);
  EXPECT_EQ(p.cls_input_dim(), 4608u);
  EXPECT_EQ(p.seg_concat_dim(), 2368u);
  EXPECT_EQ(p.head_hidden(), (std::vector<std::size_t>{512, 256}));
  EXPECT_EQ(d.head_hidden(), (std::vector<std::size_t>{128, 64}));
  EXPECT_EQ(p.n_masked(), 154u);
}

TEST(ConfigTest, ValidationErrors) {
  auto c = ModelConfig::desk();
  c.heads = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig::desk();
  c.mask_ratio = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig::desk();
  c.n_patches = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ConfigTest, TextRoundTripAndDiff) {
  auto c = ModelConfig::full();
  EXPECT_EQ(ModelConfig::from_text(c.to_text()), c);
  EXPECT_THROW(ModelConfig::from_text("embed_dim=4\nbogus=1\n"), ConfigError);
  auto d = c;
  d.embed_dim = 128;
  d.heads = 4;
  EXPECT_EQ(c.diff(d), (std::vector<std::string>{"embed_dim", "heads"}));
  EXPECT_TRUE(c.diff(c).empty());
}

TEST(MaskTest, CountsFollowRoundingRule) {
  EXPECT_EQ(masked_count(10, 0.5), 5u);
  EXPECT_EQ(masked_count(256, 0.6), 154u);
  EXPECT_EQ(masked_count(4, 0.0), 1u);   // at least one masked
  EXPECT_EQ(masked_count(4, 0.99), 3u);  // at least one visible
  EXPECT_THROW(masked_count(4, 1.0), ConfigError);
  EXPECT_THROW(masked_count(1, 0.5), ConfigError);
}

TEST(MaskTest, SampleMaskExactAndDeterministic) {
  const auto a = sample_mask(10, 0.5, 3);
  EXPECT_EQ(std::count(a.begin(), a.end(), true), 5);
  EXPECT_EQ(a, sample_mask(10, 0.5, 3));
  const auto b = sample_mask(256, 0.6, 1);
  EXPECT_EQ(std::count(b.begin(), b.end(), true), 154);
  std::set<std::vector<bool>> distinct;
  for (std::uint64_t s = 0; s < 20; ++s) distinct.insert(sample_mask(10, 0.5, s));
  EXPECT_GT(distinct.size(), 10u);
}

TEST(MaskTest, IndicesPartition) {
  const std::vector<bool> m{true, false, false, true, false};
  EXPECT_EQ(mask_indices(m, true), (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(mask_indices(m, false), (std::vector<std::size_t>{1, 2, 4}));
}

// ---- chamfer ----

double chamfer_oracle(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double total = 0.0;
  for (const auto& x : b) {
    double best = 1e300;
    for (const auto& y : a) best = std::min(best, squared_distance(x, y));
    total += best;
  }
  for (const auto& x : a) {
    double best = 1e300;
    for (const auto& y : b) best = std::min(best, squared_distance(x, y));
    total += best;
  }
  return total;
}

TEST(ChamferTest, Examples) {
  const std::vector<Vec3> a{{1, 0, 0}};
  const std::vector<Vec3> b{{0, 0, 0}};
  EXPECT_EQ(chamfer_distance(a, b), 2.0);
  Rng rng(1);
  const auto pts = random_points(10, rng);
  EXPECT_EQ(chamfer_distance(pts, pts), 0.0);
  EXPECT_THROW(chamfer_distance(std::vector<Vec3>{}, b), SizeError);
}

TEST(ChamferTest, MatchesAllPairsOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_points(1 + rng.below(32), rng);
    const auto b = random_points(1 + rng.below(32), rng);
    EXPECT_NEAR(chamfer_distance(a, b), chamfer_oracle(a, b), 1e-9);
  }
}

TEST(ChamferTest, SymmetricAndRotationInvariant) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_points(12, rng);
    const auto b = random_points(9, rng);
    const auto r = sample_rotation(RotationSetting::kRandom, rng.next_u64());
    EXPECT_NEAR(chamfer_distance(a, b), chamfer_distance(b, a), 1e-12);
    EXPECT_NEAR(chamfer_distance(a, b),
                chamfer_distance(hfbri::testing::rotate_all(a, r), hfbri::testing::rotate_all(b, r)), 1e-9);
  }
}

TEST(ChamferTest, BatchedLossMatchesPerGroupMean) {
  Rng rng(4);
  const auto pred = random_tensor({3, 5, 3}, rng, false);
  std::vector<double> targets(3 * 4 * 3);
  for (auto& t : targets) t = rng.uniform(-1, 1);
  const double loss = chamfer_loss<double>(pred, targets, 4).item();
  double expected = 0.0;
  for (std::size_t g = 0; g < 3; ++g) {
    std::vector<Vec3> p, t;
    for (std::size_t i = 0; i < 5; ++i) {
      const double* v = pred.data().data() + (g * 5 + i) * 3;
      p.push_back({v[0], v[1], v[2]});
    }
    for (std::size_t i = 0; i < 4; ++i) {
      const double* v = targets.data() + (g * 4 + i) * 3;
      t.push_back({v[0], v[1], v[2]});
    }
    expected += chamfer_oracle(p, t);
  }
  EXPECT_NEAR(loss, expected / 3.0, 1e-12);
}

TEST(ChamferTest, GradientThroughPrediction) {
  Rng rng(5);
  std::vector<double> targets(2 * 6 * 3);
  for (auto& t : targets) t = rng.uniform(-1, 1);
  std::vector<Tensor<double>> in{random_tensor({2, 5, 3}, rng)};
  EXPECT_LT(max_gradient_error(in, [&](const auto& t) { return chamfer_loss<double>(t[0], targets, 6); }), 1e-5);
}

// ---- model ----

TEST(ModelTest, EmbeddingShapesAndKPermutationInvariance) {
  const auto cfg = tiny_config();
  MaskedAutoencoder<double> model(cfg, 1);
  Rng rng(6);
  const auto rilf = random_tensor({2, cfg.n_patches, cfg.points_per_patch, 8}, rng, false);
  const auto tokens = model.embed_tokens(rilf, false);
  EXPECT_EQ(tokens.shape(), (Shape{2, cfg.n_patches, cfg.embed_dim}));
  // Reverse the K points of every patch.
  std::vector<double> flipped(rilf.numel());
  const std::size_t k = cfg.points_per_patch;
  for (std::size_t row = 0; row < 2 * cfg.n_patches; ++row) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t c = 0; c < 8; ++c) flipped[(row * k + j) * 8 + c] = rilf.data()[(row * k + (k - 1 - j)) * 8 + c];
    }
  }
  const auto tokens2 = model.embed_tokens(Tensor<double>(rilf.shape(), flipped), false);
  for (std::size_t i = 0; i < tokens.numel(); ++i) EXPECT_EQ(tokens.data()[i], tokens2.data()[i]);
}

TEST(ModelTest, ConstantInputsGiveIdenticalPatches) {
  const auto cfg = tiny_config();
  MaskedAutoencoder<double> model(cfg, 2);
  const Tensor<double> zeros_rilf(Shape{1, cfg.n_patches, cfg.points_per_patch, 8});
  const Tensor<double> zeros_rigf(Shape{1, cfg.n_patches, 5});
  const auto tok = model.embed_tokens(zeros_rilf, false);
  const auto pos = model.embed_positions(zeros_rigf);
  EXPECT_EQ(pos.shape(), (Shape{1, cfg.n_patches, cfg.embed_dim}));
  for (std::size_t p = 1; p < cfg.n_patches; ++p) {
    for (std::size_t d = 0; d < cfg.embed_dim; ++d) {
      EXPECT_EQ(tok.data()[p * cfg.embed_dim + d], tok.data()[d]);
      EXPECT_EQ(pos.data()[p * cfg.embed_dim + d], pos.data()[d]);
    }
  }
}

TEST(ModelTest, EncoderIsPermutationEquivariant) {
  const auto cfg = tiny_config();
  MaskedAutoencoder<double> model(cfg, 3);
  Rng rng(7);
  const auto tokens = random_tensor({5, cfg.embed_dim}, rng, false);
  const auto pos = random_tensor({5, cfg.embed_dim}, rng, false);
  const std::vector<std::size_t> perm{4, 2, 0, 3, 1};
  const Shape s{1, 5, cfg.embed_dim};
  const auto y = model.encode(adiff::reshape(tokens, s), adiff::reshape(pos, s));
  const auto yp = model.encode(adiff::reshape(adiff::gather_rows(tokens, perm), s),
                               adiff::reshape(adiff::gather_rows(pos, perm), s));
  ASSERT_EQ(y.block_outputs.size(), cfg.encoder_blocks);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t d = 0; d < cfg.embed_dim; ++d) {
      EXPECT_NEAR(yp.output.data()[i * cfg.embed_dim + d], y.output.data()[perm[i] * cfg.embed_dim + d], 1e-12);
    }
  }
}

TEST(ModelTest, SingleVisiblePatchEncodes) {
  const auto cfg = tiny_config();
  MaskedAutoencoder<double> model(cfg, 4);
  Rng rng(8);
  const auto y = model.encode(random_tensor({1, 1, cfg.embed_dim}, rng, false),
                              random_tensor({1, 1, cfg.embed_dim}, rng, false));
  EXPECT_EQ(y.output.shape(), (Shape{1, 1, cfg.embed_dim}));
  for (double v : y.output.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(ModelTest, DecoderShapesAndMaskTokenDuplication) {
  const auto cfg = tiny_config();
  MaskedAutoencoder<double> model(cfg, 5);
  Rng rng(9);
  std::vector<bool> mask(cfg.n_patches, false);
  mask[2] = true;
  const auto latent = random_tensor({1, cfg.n_patches - 1, cfg.embed_dim}, rng, false);
  const auto pos = random_tensor({1, cfg.n_patches, cfg.embed_dim}, rng, false);
  const auto out = model.decode(latent, pos, {mask});
  EXPECT_EQ(out.shape(), (Shape{1, 1, cfg.points_per_patch, 3}));
  for (double v : out.data()) EXPECT_TRUE(std::isfinite(v));

  // Three masked patches: injected rows equal mask token + own position.
  std::vector<bool> mask3(cfg.n_patches, false);
  mask3[0] = mask3[4] = mask3[7] = true;
  const std::size_t nv = cfg.n_patches - 3;
  const auto latent3 = random_tensor({1, nv, cfg.embed_dim}, rng, false);
  const auto in = model.decoder_input(latent3, pos, {mask3});
  const std::vector<std::size_t> masked{0, 4, 7};
  const std::size_t d = cfg.embed_dim;
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t c = 0; c < d; ++c) {
      EXPECT_NEAR(in.data()[(nv + j) * d + c] - pos.data()[masked[j] * d + c], model.mask_token().data()[c], 1e-15);
    }
  }
  // Visible rows: latent + position of the visible patch.
  EXPECT_NEAR(in.data()[0], latent3.data()[0] + pos.data()[1 * d], 1e-15);
}

TEST(ModelTest, ParameterNamesAreStableAndSeeded) {
  MaskedAutoencoder<float> a(tiny_config(), 11), b(tiny_config(), 11), c(tiny_config(), 12);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  const auto pc = c.parameters();
  ASSERT_EQ(pa.parameters.size(), pb.parameters.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.parameters.size(); ++i) {
    EXPECT_EQ(pa.parameters[i].name, pb.parameters[i].name);
    const auto va = pa.parameters[i].tensor.data();
    const auto vb = pb.parameters[i].tensor.data();
    const auto vc = pc.parameters[i].tensor.data();
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin()));
    any_diff |= !std::equal(va.begin(), va.end(), vc.begin());
  }
  EXPECT_TRUE(any_diff);
  std::set<std::string> names;
  for (const auto& p : pa.parameters) names.insert(p.name);
  EXPECT_EQ(names.size(), pa.parameters.size());
  EXPECT_TRUE(names.count("mask_token"));
  EXPECT_LT(a.encoder_parameters().parameters.size(), pa.parameters.size());
}

TEST(ModelTest, GradientThroughWholeModel) {
  // Small end-to-end check: reconstruction loss wrt a few parameters.
  auto cfg = tiny_config();
  cfg.n_patches = 4;
  cfg.points_per_patch = 4;
  cfg.mask_ratio = 0.5;
  MaskedAutoencoder<double> model(cfg, 6);
  const auto cloud = cloud_for(1, 32);
  std::vector<PreparedCloud> prepared{prepare_cloud(cloud, Rotation::identity(), cfg)};
  const auto batch = ptrs(prepared);
  const std::vector<std::vector<bool>> masks{{false, true, false, true}};
  auto params = model.parameters();
  std::vector<Tensor<double>> in;
  for (const auto& p : params.parameters) {
    if (p.name == "mask_token" || p.name.rfind("recon_head", 0) == 0 || p.name.rfind("encoder.0.attn", 0) == 0) {
      in.push_back(p.tensor);
    }
  }
  ASSERT_FALSE(in.empty());
  // Eval-mode batch norm keeps the objective a fixed function of parameters.
  EXPECT_LT(max_gradient_error(in,
                               [&](const auto&) {
                                 return pretrain_loss(model, std::span<const PreparedCloud* const>(batch), masks,
                                                      false);
                               }),
            1e-5);
}

// ---- pipeline ----

TEST(PipelineTest, PreparedTargetsAreAlignedMemberCoordinates) {
  const auto cfg = tiny_config();
  const auto cloud = cloud_for(3);
  const auto r = sample_rotation(RotationSetting::kRandom, 5);
  const auto prep = prepare_cloud(cloud, r, cfg);
  ASSERT_EQ(prep.targets.size(), cfg.n_patches * cfg.points_per_patch * 3);
  for (std::size_t p = 0; p < cfg.n_patches; ++p) {
    for (std::size_t j = 0; j < cfg.points_per_patch; ++j) {
      const auto idx = prep.patches.row(p)[j];
      const double* t = prep.targets.data() + (p * cfg.points_per_patch + j) * 3;
      EXPECT_EQ(t[0], cloud.points[idx].x);
      EXPECT_EQ(t[2], cloud.points[idx].z);
    }
  }
  // Patch indices do not depend on the rotation.
  const auto aligned = prepare_cloud(cloud, Rotation::identity(), cfg);
  EXPECT_EQ(prep.patches.members, aligned.patches.members);
}

TEST(PipelineTest, MaskedTargetsAudit) {
  // With the prediction replaced by the targets, the loss is exactly zero;
  // any misaddressed patch would make it positive.
  const auto cfg = tiny_config();
  const auto cloud = cloud_for(4);
  const auto prep = prepare_cloud(cloud, Rotation::identity(), cfg);
  const auto mask = sample_mask(cfg.n_patches, cfg.mask_ratio, 9);
  const auto masked = mask_indices(mask, true);
  const std::size_t k = cfg.points_per_patch;
  std::vector<double> pred_values, targets;
  for (auto p : masked) {
    for (std::size_t j = 0; j < k * 3; ++j) {
      pred_values.push_back(prep.targets[p * k * 3 + j]);
      targets.push_back(prep.targets[p * k * 3 + j]);
    }
  }
  const Tensor<double> pred(Shape{masked.size(), k, 3}, pred_values);
  EXPECT_EQ(chamfer_loss<double>(pred, targets, k).item(), 0.0);
}

TEST(PipelineTest, PretrainLossNonNegativeAndRotationInvariant) {
  const auto cfg = tiny_config();
  MaskedAutoencoder<float> model(cfg, 7);
  int compared = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto cloud = cloud_for(20 + s);
    const auto a = prepare_cloud(cloud, Rotation::identity(), cfg);
    const auto b = prepare_cloud(cloud, sample_rotation(RotationSetting::kRandom, s), cfg);
    if (a.min_margin < 1e-6 || b.min_margin < 1e-6) continue;
    const auto mask = sample_mask(cfg.n_patches, cfg.mask_ratio, s);
    const std::vector<const PreparedCloud*> pa{&a}, pb{&b};
    const double la = pretrain_loss(model, std::span<const PreparedCloud* const>(pa), {mask}, false).item();
    const double lb = pretrain_loss(model, std::span<const PreparedCloud* const>(pb), {mask}, false).item();
    EXPECT_GE(la, 0.0);
    EXPECT_NEAR(la, lb, 1e-3 * std::max(1.0, std::abs(la)));
    ++compared;
  }
  EXPECT_GE(compared, 3);
}

TEST(PipelineTest, EncoderInvariance64Bit) {
  const auto cfg = tiny_config();
  MaskedAutoencoder<double> model(cfg, 8);
  int compared = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto cloud = cloud_for(40 + s);
    const auto a = prepare_cloud(cloud, Rotation::identity(), cfg);
    const auto b = prepare_cloud(cloud, sample_rotation(RotationSetting::kRandom, 100 + s), cfg);
    if (a.min_margin < 1e-6 || b.min_margin < 1e-6) continue;
    const std::vector<const PreparedCloud*> pa{&a}, pb{&b};
    const auto ea = encode_clouds(model, std::span<const PreparedCloud* const>(pa), false);
    const auto eb = encode_clouds(model, std::span<const PreparedCloud* const>(pb), false);
    for (std::size_t i = 0; i < ea.output.numel(); ++i) ASSERT_NEAR(ea.output.data()[i], eb.output.data()[i], 1e-6);
    ++compared;
  }
  EXPECT_GE(compared, 5);
}

TEST(PipelineTest, GlobalFeaturePooling) {
  const Tensor<double> one(Shape{1, 1, 3}, {1.0, -2.0, 0.5});
  const auto g = global_feature(one);
  EXPECT_EQ(g.shape(), (Shape{1, 3}));
  EXPECT_EQ(g.data()[1], -4.0);
  Rng rng(10);
  const auto x = random_tensor({5, 4}, rng, false);
  const std::vector<std::size_t> perm{2, 4, 1, 0, 3};
  const auto a = global_feature(adiff::reshape(x, Shape{1, 5, 4}));
  const auto b = global_feature(adiff::reshape(adiff::gather_rows(x, perm), Shape{1, 5, 4}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-15);
}

// ---- heads ----

TEST(HeadsTest, ClassificationShapesAndUniformAtZero) {
  const auto cfg = tiny_config();
  ClassificationHead<double> head(cfg, 1);
  Rng rng(11);
  const Tensor<double> zeros(Shape{3, cfg.cls_input_dim()});
  const auto logits = head(zeros, false, rng);
  EXPECT_EQ(logits.shape(), (Shape{3, cfg.cls_dim}));
  for (double v : logits.data()) EXPECT_EQ(v, logits.data()[0]);
}

TEST(HeadsTest, ClassificationGradient) {
  const auto cfg = tiny_config();
  ClassificationHead<double> head(cfg, 2);
  Rng rng(12);
  std::vector<Tensor<double>> in{random_tensor({4, cfg.cls_input_dim()}, rng)};
  for (const auto& t : head.parameters().tensors()) {
    if (t.rank() == 2 && t.dim(1) == cfg.cls_dim) in.push_back(t);
  }
  const std::vector<int> labels{0, 1, 2, 3};
  EXPECT_LT(max_gradient_error(in,
                               [&](const auto& t) {
                                 Rng drop(4);
                                 return adiff::cross_entropy(head(t[0], true, drop), labels);
                               }),
            1e-5);
}

TEST(HeadsTest, AssignmentToNearestPatches) {
  const std::vector<Vec3> centers{{0, 0, 0}, {10, 0, 0}, {0, 10, 0}, {0, 0, 10}};
  const std::vector<Vec3> pts{{9, 0, 0}, {0, 0, 0.1}};
  const auto a = assign_points_to_patches(pts, centers, 2);
  EXPECT_EQ(a, (std::vector<std::size_t>{1, 0, 0, 3}));
}

TEST(HeadsTest, SegmentationShapesAndConstantPropagation) {
  const auto cfg = tiny_config();
  SegmentationHead<double> head(cfg, 3);
  Rng rng(13);
  const std::size_t points = 6;
  std::vector<double> tok(cfg.n_patches * cfg.embed_dim);
  for (std::size_t p = 0; p < cfg.n_patches; ++p) {
    for (std::size_t d = 0; d < cfg.embed_dim; ++d) tok[p * cfg.embed_dim + d] = 0.1 * static_cast<double>(d);
  }
  const Tensor<double> tokens(Shape{1, cfg.n_patches, cfg.embed_dim}, tok);
  std::vector<double> onehot(cfg.cls_dim, 0.0);
  onehot[1] = 1.0;
  const Tensor<double> labels(Shape{1, cfg.cls_dim}, onehot);
  std::vector<std::size_t> assign;
  for (std::size_t i = 0; i < points * kSegNeighborPatches; ++i) assign.push_back(rng.below(cfg.n_patches));
  const auto feats = head.concat_features(tokens, labels, {assign}, points);
  EXPECT_EQ(feats.shape(), (Shape{points, cfg.seg_concat_dim()}));
  const auto logits = head(tokens, labels, {assign}, points, false, rng);
  EXPECT_EQ(logits.shape(), (Shape{1, points, cfg.seg_dim}));
  for (std::size_t i = 1; i < points; ++i) {
    for (std::size_t c = 0; c < cfg.seg_dim; ++c) {
      EXPECT_NEAR(logits.data()[i * cfg.seg_dim + c], logits.data()[c], 1e-12);
    }
  }
}

// ---- checkpoint ----

TEST(CheckpointTest, RoundTripReproducesForwardBitwise) {
  const auto cfg = tiny_config();
  MaskedAutoencoder<float> model(cfg, 21);
  const auto cloud = cloud_for(5);
  std::vector<PreparedCloud> prepared{prepare_cloud(cloud, Rotation::identity(), cfg)};
  const auto batch = ptrs(prepared);
  // Train-mode forward once so running statistics are non-trivial.
  encode_clouds(model, std::span<const PreparedCloud* const>(batch), true);
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.step = 17;
  add_to_checkpoint(ckpt, model.parameters());
  std::stringstream buf;
  write_checkpoint(buf, ckpt);
  const auto back = read_checkpoint(buf);
  EXPECT_EQ(back.config, cfg);
  EXPECT_EQ(back.step, 17u);
  MaskedAutoencoder<float> restored(back.config, 999);
  auto params = restored.parameters();
  restore_from_checkpoint(back, params);
  const auto a = encode_clouds(model, std::span<const PreparedCloud* const>(batch), false);
  const auto b = encode_clouds(restored, std::span<const PreparedCloud* const>(batch), false);
  ASSERT_EQ(a.output.numel(), b.output.numel());
  EXPECT_TRUE(std::equal(a.output.data().begin(), a.output.data().end(), b.output.data().begin()));
}

TEST(CheckpointTest, Errors) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_checkpoint(bad), DataError);
  const auto cfg = tiny_config();
  MaskedAutoencoder<float> model(cfg, 1);
  Checkpoint ckpt;
  ckpt.config = cfg;
  add_to_checkpoint(ckpt, model.parameters());
  std::stringstream buf;
  write_checkpoint(buf, ckpt);
  std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_checkpoint(truncated), DataError);

  auto missing = ckpt;
  missing.tensors.erase("mask_token");
  auto params = model.parameters();
  EXPECT_THROW(restore_from_checkpoint(missing, params), ConfigError);
  auto bigger = cfg;
  bigger.embed_dim = 32;
  MaskedAutoencoder<float> other(bigger, 1);
  auto other_params = other.parameters();
  EXPECT_THROW(restore_from_checkpoint(ckpt, other_params), ConfigError);
}

}  // namespace
}  // namespace hfbri::mae
