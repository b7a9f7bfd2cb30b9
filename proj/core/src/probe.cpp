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
#include "hfbri/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "hfbri/error.hpp"
#include "hfbri/rng.hpp"

namespace hfbri::probe {
namespace {

constexpr double kInitStd = 1e-3;
constexpr int kMaxHalvings = 40;

struct Problem {
  const std::vector<double>* x;  // standardized, M x dim
  const std::vector<int>* y;
  std::size_t m, dim, classes;
  double l2;
};

// Objective and (optionally) its subgradient.
double objective(const Problem& pb, const std::vector<double>& w, const std::vector<double>& b,
                 std::vector<double>* gw, std::vector<double>* gb) {
  if (gw) {
    gw->assign(w.size(), 0.0);
    gb->assign(b.size(), 0.0);
  }
  std::vector<double> s(pb.classes);
  double loss = 0.0;
  const double inv_m = 1.0 / static_cast<double>(pb.m);
  for (std::size_t i = 0; i < pb.m; ++i) {
    const double* xi = pb.x->data() + i * pb.dim;
    for (std::size_t c = 0; c < pb.classes; ++c) {
      double acc = b[c];
      const double* wc = w.data() + c * pb.dim;
      for (std::size_t j = 0; j < pb.dim; ++j) acc += wc[j] * xi[j];
      s[c] = acc;
    }
    const auto yi = static_cast<std::size_t>((*pb.y)[i]);
    std::size_t rival = yi == 0 ? 1 : 0;
    for (std::size_t c = 0; c < pb.classes; ++c) {
      if (c != yi && s[c] > s[rival]) rival = c;
    }
    const double hinge = 1.0 + s[rival] - s[yi];
    if (pb.classes > 1 && hinge > 0.0) {
      loss += hinge * inv_m;
      if (gw) {
        double* gr = gw->data() + rival * pb.dim;
        double* gy = gw->data() + yi * pb.dim;
        for (std::size_t j = 0; j < pb.dim; ++j) {
          gr[j] += xi[j] * inv_m;
          gy[j] -= xi[j] * inv_m;
        }
        (*gb)[rival] += inv_m;
        (*gb)[yi] -= inv_m;
      }
    }
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  if (gw) {
    for (std::size_t i = 0; i < w.size(); ++i) (*gw)[i] += pb.l2 * w[i];
  }
  return loss + 0.5 * pb.l2 * reg;
}

std::vector<double> standardize(const LinearProbe& probe, std::span<const double> f) {
  std::vector<double> z(probe.dim);
  for (std::size_t j = 0; j < probe.dim; ++j) z[j] = (f[j] - probe.mean[j]) * probe.inv_std[j];
  return z;
}

}  // namespace

std::vector<double> LinearProbe::scores(std::span<const double> feature) const {
  if (feature.size() != dim) {
    throw ShapeError("probe expects " + std::to_string(dim) + " features, got " + std::to_string(feature.size()));
  }
  const auto z = standardize(*this, feature);
  std::vector<double> s(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    double acc = bias[c];
    for (std::size_t j = 0; j < dim; ++j) acc += weights[c * dim + j] * z[j];
    s[c] = acc;
  }
  return s;
}

int LinearProbe::predict(std::span<const double> feature) const {
  const auto s = scores(feature);
  return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
}

double LinearProbe::margin(std::span<const double> feature) const {
  auto s = scores(feature);
  if (s.size() < 2) return std::numeric_limits<double>::infinity();
  std::partial_sort(s.begin(), s.begin() + 2, s.end(), std::greater<>());
  return s[0] - s[1];
}

LinearProbe train_probe(const FeatureMatrix& features, std::span<const int> labels,
                        std::size_t num_classes, const ProbeOptions& options) {
  if (features.size() != labels.size()) throw DataError("probe: feature and label counts differ");
  if (features.empty()) throw DataError("probe: no training examples");
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DataError("probe: label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw DataError("probe: class " + std::to_string(c) + " has no training examples");
  }

  LinearProbe probe;
  probe.classes = num_classes;
  probe.dim = features[0].size();
  const std::size_t m = features.size();
  const std::size_t dim = probe.dim;
  probe.mean.assign(dim, 0.0);
  probe.inv_std.assign(dim, 1.0);
  for (const auto& f : features) {
    if (f.size() != dim) throw DataError("probe: ragged feature rows");
    for (std::size_t j = 0; j < dim; ++j) probe.mean[j] += f[j];
  }
  for (auto& v : probe.mean) v /= static_cast<double>(m);
  std::vector<double> var(dim, 0.0);
  for (const auto& f : features) {
    for (std::size_t j = 0; j < dim; ++j) var[j] += (f[j] - probe.mean[j]) * (f[j] - probe.mean[j]);
  }
  for (std::size_t j = 0; j < dim; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(m));
    // Constant columns carry no information; leave them centered at zero.
    probe.inv_std[j] = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  std::vector<double> x;
  x.reserve(m * dim);
  for (const auto& f : features) {
    const auto z = standardize(probe, f);
    x.insert(x.end(), z.begin(), z.end());
  }
  const std::vector<int> y(labels.begin(), labels.end());
  const Problem pb{&x, &y, m, dim, num_classes, options.l2};

  Rng rng(derive_seed(options.seed, {0x70726f6265ULL}));
  probe.weights.resize(num_classes * dim);
  for (auto& w : probe.weights) w = kInitStd * rng.normal();
  probe.bias.assign(num_classes, 0.0);

  std::vector<double> gw, gb;
  double current = objective(pb, probe.weights, probe.bias, &gw, &gb);
  probe.objective.push_back(current);
  double step = options.lr;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    bool accepted = false;
    for (int tries = 0; tries < kMaxHalvings && !accepted; ++tries) {
      std::vector<double> w2 = probe.weights, b2 = probe.bias;
      for (std::size_t i = 0; i < w2.size(); ++i) w2[i] -= step * gw[i];
      for (std::size_t i = 0; i < b2.size(); ++i) b2[i] -= step * gb[i];
      const double next = objective(pb, w2, b2, nullptr, nullptr);
      if (next <= current) {
        probe.weights = std::move(w2);
        probe.bias = std::move(b2);
        accepted = true;
      } else {
        step *= 0.5;
      }
    }
    if (accepted) current = objective(pb, probe.weights, probe.bias, &gw, &gb);
    probe.objective.push_back(current);
  }
  return probe;
}

double accuracy(const LinearProbe& probe, const FeatureMatrix& features, std::span<const int> labels) {
  if (features.size() != labels.size()) throw DataError("accuracy: feature and label counts differ");
  if (features.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i) correct += probe.predict(features[i]) == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(features.size());
}

Episode few_shot_episode(std::span<const int> labels, std::size_t ways, std::size_t shots,
                         std::size_t queries, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (ways == 0) throw ConfigError("few-shot: ways must be positive");
  if (by_class.size() < ways) {
    throw DataError("few-shot: " + std::to_string(ways) + "-way episode needs " + std::to_string(ways) +
                    " classes, dataset has " + std::to_string(by_class.size()));
  }
  std::vector<int> classes;
  for (const auto& [c, _] : by_class) classes.push_back(c);
  Rng rng(derive_seed(seed, {0x65706973ULL, ways, shots, queries}));
  rng.shuffle(classes.begin(), classes.end());
  classes.resize(ways);

  Episode ep;
  ep.classes = classes;
  for (std::size_t w = 0; w < ways; ++w) {
    auto pool = by_class[classes[w]];
    if (pool.size() < shots + queries) {
      throw DataError("few-shot: class " + std::to_string(classes[w]) + " has " + std::to_string(pool.size()) +
                      " examples, episode needs " + std::to_string(shots + queries));
    }
    rng.shuffle(pool.begin(), pool.end());
    for (std::size_t i = 0; i < shots; ++i) {
      ep.support.push_back(pool[i]);
      ep.support_labels.push_back(static_cast<int>(w));
    }
    for (std::size_t i = shots; i < shots + queries; ++i) {
      ep.query.push_back(pool[i]);
      ep.query_labels.push_back(static_cast<int>(w));
    }
  }
  return ep;
}

std::vector<GridCell> evaluate_grid(const FeatureFn& features, std::span<const int> train_labels,
                                    std::span<const int> test_labels, std::size_t num_classes,
                                    std::span<const RotationSetting> train_settings,
                                    std::span<const RotationSetting> test_settings,
                                    const ProbeOptions& options) {
  std::vector<GridCell> cells;
  std::map<RotationSetting, FeatureMatrix> test_cache;
  for (auto x : train_settings) {
    const auto probe = train_probe(features(true, x), train_labels, num_classes, options);
    for (auto y : test_settings) {
      auto it = test_cache.find(y);
      if (it == test_cache.end()) it = test_cache.emplace(y, features(false, y)).first;
      cells.push_back({x, y, accuracy(probe, it->second, test_labels), test_labels.size()});
    }
  }
  return cells;
}

void write_grid_csv(std::ostream& out, std::span<const GridCell> cells, std::uint64_t seed,
                    const std::string& config_hash) {
  out << "train_setting,test_setting,accuracy,n_test,seed\n";
  char buf[64];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof(buf), "%.6f", c.accuracy);
    out << setting_name(c.train) << ',' << setting_name(c.test) << ',' << buf << ',' << c.n_test << ','
        << seed << '\n';
  }
  out << "# seed=" << seed << " config_hash=" << config_hash << '\n';
}

}  // namespace hfbri::probe
