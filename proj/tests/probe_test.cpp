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
#include "hfbri/probe.hpp"
#include "hfbri/rng.hpp"

namespace hfbri::probe {
namespace {

// Gaussian clusters around well-separated centers.
void make_clusters(std::size_t classes, std::size_t per_class, double spread, std::uint64_t seed,
                   FeatureMatrix& x, std::vector<int>& y) {
  Rng rng(seed);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> f(4, 0.0);
      f[c % 4] = 5.0 + 5.0 * static_cast<double>(c / 4);
      for (auto& v : f) v += spread * rng.normal();
      x.push_back(f);
      y.push_back(static_cast<int>(c));
    }
  }
}

TEST(LinearProbeTest, SeparableClustersReachFullAccuracy) {
  FeatureMatrix x, xt;
  std::vector<int> y, yt;
  make_clusters(4, 30, 0.3, 1, x, y);
  make_clusters(4, 20, 0.3, 2, xt, yt);
  const auto probe = train_probe(x, y, 4, {});
  EXPECT_EQ(accuracy(probe, x, y), 1.0);
  EXPECT_EQ(accuracy(probe, xt, yt), 1.0);
}

TEST(LinearProbeTest, MemorizesSmallRandomSet) {
  // n <= dim + 1 points in general position are always separable.
  Rng rng(3);
  FeatureMatrix x;
  std::vector<int> y;
  for (int i = 0; i < 8; ++i) {
    std::vector<double> f(10);
    for (auto& v : f) v = rng.normal();
    x.push_back(f);
    y.push_back(i % 3);
  }
  ProbeOptions opt;
  opt.epochs = 2000;
  opt.lr = 0.1;
  opt.l2 = 1e-6;
  const auto probe = train_probe(x, y, 3, opt);
  EXPECT_EQ(accuracy(probe, x, y), 1.0);
}

TEST(LinearProbeTest, DeterministicAndObjectiveMonotone) {
  FeatureMatrix x;
  std::vector<int> y;
  make_clusters(3, 20, 3.0, 4, x, y);
  ProbeOptions opt;
  opt.seed = 9;
  const auto a = train_probe(x, y, 3, opt);
  const auto b = train_probe(x, y, 3, opt);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
  ASSERT_EQ(a.objective.size(), opt.epochs + 1);
  for (std::size_t i = 1; i < a.objective.size(); ++i) EXPECT_LE(a.objective[i], a.objective[i - 1]);
  EXPECT_LT(a.objective.back(), a.objective.front());
}

TEST(LinearProbeTest, ScoresMarginAndPredictAgree) {
  FeatureMatrix x;
  std::vector<int> y;
  make_clusters(3, 10, 0.5, 5, x, y);
  const auto probe = train_probe(x, y, 3, {});
  for (const auto& f : x) {
    const auto s = probe.scores(f);
    const auto best = std::max_element(s.begin(), s.end()) - s.begin();
    EXPECT_EQ(probe.predict(f), best);
    EXPECT_GE(probe.margin(f), 0.0);
  }
}

TEST(LinearProbeTest, ConstantColumnIsHarmless) {
  FeatureMatrix x;
  std::vector<int> y;
  make_clusters(2, 10, 0.2, 6, x, y);
  for (auto& f : x) f.push_back(7.0);
  const auto probe = train_probe(x, y, 2, {});
  EXPECT_EQ(probe.inv_std.back(), 0.0);
  EXPECT_EQ(accuracy(probe, x, y), 1.0);
}

TEST(LinearProbeTest, Errors) {
  FeatureMatrix x{{0.0}, {1.0}};
  const std::vector<int> y{0, 0};
  EXPECT_THROW(train_probe(x, y, 2, {}), DataError);
  const std::vector<int> short_labels{0};
  EXPECT_THROW(train_probe(x, short_labels, 1, {}), DataError);
}

std::vector<int> balanced_labels(int classes, int per_class) {
  std::vector<int> labels;
  for (int i = 0; i < classes * per_class; ++i) labels.push_back(i % classes);
  return labels;
}

TEST(EpisodeTest, CountsAndDisjointness) {
  const auto labels = balanced_labels(8, 30);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto e = few_shot_episode(labels, 5, 10, 20, seed);
    ASSERT_EQ(e.classes.size(), 5u);
    EXPECT_EQ(std::set<int>(e.classes.begin(), e.classes.end()).size(), 5u);
    EXPECT_EQ(e.support.size(), 50u);
    EXPECT_EQ(e.query.size(), 100u);
    std::set<std::size_t> s(e.support.begin(), e.support.end());
    EXPECT_EQ(s.size(), 50u);
    for (auto q : e.query) EXPECT_EQ(s.count(q), 0u);
    for (std::size_t i = 0; i < e.support.size(); ++i) {
      EXPECT_EQ(labels[e.support[i]], e.classes[e.support_labels[i]]);
    }
    for (std::size_t i = 0; i < e.query.size(); ++i) {
      EXPECT_EQ(labels[e.query[i]], e.classes[e.query_labels[i]]);
    }
  }
}

TEST(EpisodeTest, DeterministicPerSeed) {
  const auto labels = balanced_labels(6, 25);
  const auto a = few_shot_episode(labels, 3, 5, 5, 7);
  const auto b = few_shot_episode(labels, 3, 5, 5, 7);
  EXPECT_EQ(a.support, b.support);
  EXPECT_EQ(a.query, b.query);
  std::set<std::vector<std::size_t>> distinct;
  for (std::uint64_t s = 0; s < 10; ++s) distinct.insert(few_shot_episode(labels, 3, 5, 5, s).support);
  EXPECT_GT(distinct.size(), 5u);
}

TEST(EpisodeTest, SingleWayAndShortage) {
  const auto labels = balanced_labels(3, 5);
  const auto e = few_shot_episode(labels, 1, 2, 3, 1);
  EXPECT_EQ(e.support.size(), 2u);
  EXPECT_EQ(e.query.size(), 3u);
  for (int l : e.support_labels) EXPECT_EQ(l, 0);
  EXPECT_THROW(few_shot_episode(labels, 2, 3, 3, 1), DataError);
  EXPECT_THROW(few_shot_episode(labels, 4, 1, 1, 1), DataError);
}

TEST(GridTest, OneCellPerSettingPairAndCsv) {
  FeatureMatrix x;
  std::vector<int> y;
  make_clusters(2, 10, 0.2, 8, x, y);
  std::vector<std::pair<bool, RotationSetting>> calls;
  const FeatureFn fn = [&](bool train, RotationSetting s) {
    calls.emplace_back(train, s);
    return x;
  };
  const std::vector<RotationSetting> settings{RotationSetting::kAligned, RotationSetting::kZ,
                                              RotationSetting::kRandom};
  const auto cells = evaluate_grid(fn, y, y, 2, settings, settings, {});
  ASSERT_EQ(cells.size(), 9u);
  for (const auto& c : cells) {
    EXPECT_EQ(c.accuracy, 1.0);
    EXPECT_EQ(c.n_test, 20u);
  }
  EXPECT_EQ(cells[1].train, RotationSetting::kAligned);
  EXPECT_EQ(cells[1].test, RotationSetting::kZ);
  std::ostringstream out;
  write_grid_csv(out, cells, 42, "abc");
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "train_setting,test_setting,accuracy,n_test,seed");
  std::getline(lines, line);
  EXPECT_EQ(line, "A,A,1.000000,20,42");
  int rows = 1;
  while (std::getline(lines, line) && line[0] != '#') ++rows;
  EXPECT_EQ(rows, 9);
  EXPECT_EQ(line, "# seed=42 config_hash=abc");
}

}  // namespace
}  // namespace hfbri::probe
