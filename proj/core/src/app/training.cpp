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
#include "hfbri/app/training.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "hfbri/adiff/optim.hpp"
#include "hfbri/error.hpp"
#include "hfbri/mae/heads.hpp"

namespace hfbri::app {
namespace {

using adiff::Shape;
using adiff::Tensor;

// Stream tags for derive_seed.
constexpr std::uint64_t kModelTag = 0x10;
constexpr std::uint64_t kRotationTag = 0x11;
constexpr std::uint64_t kShuffleTag = 0x12;
constexpr std::uint64_t kMaskTag = 0x13;
constexpr std::uint64_t kGridTag = 0x14;
constexpr std::uint64_t kFewShotTag = 0x15;
constexpr std::uint64_t kHeadTag = 0x16;
constexpr std::uint64_t kDropoutTag = 0x17;
constexpr std::uint64_t kTestTag = 0x18;
constexpr std::uint64_t kProbeTag = 0x19;

constexpr std::size_t kEvalBatch = 32;

std::vector<const mae::PreparedCloud*> batch_of(const std::vector<mae::PreparedCloud>& all,
                                                std::span<const std::size_t> idx) {
  std::vector<const mae::PreparedCloud*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&all[i]);
  return out;
}

std::size_t batch_count(std::size_t n, std::size_t batch) { return (n + batch - 1) / batch; }

void check_finite(double loss, std::size_t step, const char* what) {
  if (!std::isfinite(loss)) throw NumericError(std::string("non-finite ") + what + " loss", step);
}

probe::ProbeOptions probe_options(const RunConfig& config, std::uint64_t tag) {
  return {config.probe.epochs, config.probe.lr, config.probe.l2, derive_seed(config.require_seed(), {kProbeTag, tag})};
}

int argmax_row(std::span<const float> row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::string join_groups(const std::vector<RilfGroup>& groups) {
  if (groups.empty()) return "none";
  std::string s;
  for (auto g : groups) {
    if (!s.empty()) s += "+";
    s += group_name(g);
  }
  return s;
}

std::string format_ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", r);
  return buf;
}

}  // namespace

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min(threads, n);
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<mae::PreparedCloud> prepare_clouds(std::span<const PointCloud> clouds, RotationSetting setting,
                                               std::uint64_t seed, const mae::ModelConfig& model,
                                               const FeatureOptions& features, std::size_t threads) {
  std::vector<mae::PreparedCloud> out(clouds.size());
  parallel_for(clouds.size(), threads, [&](std::size_t i) {
    const auto rot = sample_rotation(setting, derive_seed(seed, {i}));
    out[i] = mae::prepare_cloud(clouds[i], rot, model, features);
  });
  return out;
}

Model initial_model(const RunConfig& config) {
  return Model(config.model, derive_seed(config.require_seed(), {kModelTag}));
}

Model model_from_checkpoint(const mae::Checkpoint& ckpt) {
  Model model(ckpt.config, 0);
  auto params = model.parameters();
  mae::restore_from_checkpoint(ckpt, params);
  return model;
}

mae::Checkpoint model_checkpoint(Model& model, std::uint64_t step) {
  mae::Checkpoint ckpt;
  ckpt.config = model.config();
  ckpt.step = step;
  mae::add_to_checkpoint(ckpt, model.parameters());
  return ckpt;
}

PretrainResult pretrain(const RunConfig& config, const Dataset& data, std::size_t threads,
                        const EpochCallback& on_epoch) {
  const std::uint64_t seed = config.require_seed();
  if (data.train.empty()) throw DataError("pretraining needs at least one training cloud");
  Model model = initial_model(config);
  auto params = model.parameters();
  adiff::AdamWOptions opt_options;
  opt_options.weight_decay = config.weight_decay;
  adiff::AdamW<float> optimizer(params.tensors(), opt_options);

  const std::size_t n = data.train.size();
  const std::size_t per_epoch = batch_count(n, config.batch_size);
  const std::size_t total_steps = per_epoch * config.epochs;
  std::size_t step = 0;
  PretrainResult result;
  std::vector<mae::PreparedCloud> prepared;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    // Aligned training sees identical geometry every epoch; prepare once.
    if (epoch == 0 || config.train_rotation != RotationSetting::kAligned) {
      prepared = prepare_clouds(data.train, config.train_rotation, derive_seed(seed, {kRotationTag, epoch}),
                                config.model, config.features, threads);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(seed, {kShuffleTag, epoch}));
    shuffle_rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(n, lo + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
      const auto batch = batch_of(prepared, idx);
      std::vector<std::vector<bool>> masks;
      masks.reserve(idx.size());
      for (auto i : idx) {
        masks.push_back(mae::sample_mask(config.model.n_patches, config.model.mask_ratio,
                                         derive_seed(seed, {kMaskTag, epoch, i})));
      }
      auto loss = mae::pretrain_loss(model, std::span<const mae::PreparedCloud* const>(batch), masks, true);
      const double value = loss.item();
      check_finite(value, step, "pretraining");
      adiff::backward(loss);
      lr = adiff::cosine_lr(step, total_steps, config.lr);
      optimizer.step(lr);
      optimizer.zero_grad();
      loss_sum += value * static_cast<double>(idx.size());
      ++step;
    }
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.mean_loss = loss_sum / static_cast<double>(n);
    stats.lr = lr;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats, model);
  }
  result.checkpoint = model_checkpoint(model, step);
  return result;
}

probe::FeatureMatrix frozen_features(Model& model, const std::vector<mae::PreparedCloud>& prepared,
                                     ProbeFeature kind) {
  adiff::NoGradGuard no_grad;
  probe::FeatureMatrix out;
  out.reserve(prepared.size());
  std::vector<std::size_t> idx(prepared.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t lo = 0; lo < prepared.size(); lo += kEvalBatch) {
    const std::size_t hi = std::min(prepared.size(), lo + kEvalBatch);
    const auto batch = batch_of(prepared, std::span<const std::size_t>(idx.data() + lo, hi - lo));
    const auto enc = mae::encode_clouds(model, std::span<const mae::PreparedCloud* const>(batch), false);
    const auto feat = kind == ProbeFeature::kPooled ? mae::global_feature(enc.output)
                                                     : mae::block_concat_feature(enc);
    const std::size_t width = feat.dim(1);
    const auto values = feat.data();
    for (std::size_t r = 0; r < batch.size(); ++r) {
      out.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(r * width),
                       values.begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
    }
  }
  return out;
}

std::vector<probe::GridCell> run_grid(const RunConfig& config, Model& model, const Dataset& data,
                                      std::size_t threads) {
  const std::uint64_t seed = config.require_seed();
  const auto train_labels = Dataset::labels_of(data.train);
  const auto test_labels = Dataset::labels_of(data.test);
  probe::FeatureFn features = [&](bool train_split, RotationSetting setting) {
    const auto& clouds = train_split ? data.train : data.test;
    const auto prepared = prepare_clouds(clouds, setting,
                                         derive_seed(seed, {kGridTag, train_split ? 0u : 1u,
                                                            static_cast<std::uint64_t>(setting)}),
                                         model.config(), config.features, threads);
    return frozen_features(model, prepared, config.probe.feature);
  };
  return probe::evaluate_grid(features, train_labels, test_labels, data.num_classes(),
                              config.probe.train_settings, config.probe.test_settings,
                              probe_options(config, kGridTag));
}

FewShotResult run_fewshot(const RunConfig& config, Model& model, const Dataset& data, std::size_t threads) {
  const std::uint64_t seed = config.require_seed();
  const auto& fs = config.fewshot;
  const auto labels = Dataset::labels_of(data.test);
  const auto prepared = prepare_clouds(data.test, fs.setting, derive_seed(seed, {kFewShotTag}), model.config(),
                                       config.features, threads);
  const auto features = frozen_features(model, prepared, config.probe.feature);
  FewShotResult result;
  for (std::size_t e = 0; e < fs.episodes; ++e) {
    const auto ep = probe::few_shot_episode(labels, fs.ways, fs.shots, fs.queries,
                                            derive_seed(seed, {kFewShotTag, e}));
    probe::FeatureMatrix support, query;
    for (auto i : ep.support) support.push_back(features[i]);
    for (auto i : ep.query) query.push_back(features[i]);
    const auto p = probe::train_probe(support, ep.support_labels, fs.ways, probe_options(config, kFewShotTag + e));
    result.accuracies.push_back(probe::accuracy(p, query, ep.query_labels));
  }
  if (!result.accuracies.empty()) {
    const double n = static_cast<double>(result.accuracies.size());
    result.mean = std::accumulate(result.accuracies.begin(), result.accuracies.end(), 0.0) / n;
    double var = 0.0;
    for (double a : result.accuracies) var += (a - result.mean) * (a - result.mean);
    result.stddev = std::sqrt(var / n);
  }
  return result;
}

namespace {

struct SegSample {
  std::vector<std::size_t> assignment;
};

std::vector<SegSample> seg_assignments(const std::vector<mae::PreparedCloud>& prepared) {
  std::vector<SegSample> out(prepared.size());
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const auto& c = prepared[i];
    std::vector<Vec3> centers;
    for (auto idx : c.patches.centers) centers.push_back(c.points[idx]);
    out[i].assignment = mae::assign_points_to_patches(c.points, centers, mae::kSegNeighborPatches);
  }
  return out;
}

Tensor<float> one_hot(std::span<const mae::PreparedCloud* const> batch, std::size_t classes) {
  std::vector<float> v(batch.size() * classes, 0.0f);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const int y = batch[b]->label;
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw DataError("class label outside cls_dim");
    v[b * classes + static_cast<std::size_t>(y)] = 1.0f;
  }
  return Tensor<float>(Shape{batch.size(), classes}, std::move(v));
}

std::vector<PointCloud> with_parts(const std::vector<PointCloud>& clouds, std::size_t seg_dim) {
  std::vector<PointCloud> out;
  for (const auto& c : clouds) {
    if (!c.part_labels) continue;
    for (int p : *c.part_labels) {
      if (p < 0 || static_cast<std::size_t>(p) >= seg_dim) {
        throw DataError("part label " + std::to_string(p) + " outside seg_dim " + std::to_string(seg_dim));
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

FinetuneResult finetune(const RunConfig& config, const Dataset& data, const mae::Checkpoint* init,
                        std::size_t threads) {
  const std::uint64_t seed = config.require_seed();
  const auto& ft = config.finetune;
  const bool seg = ft.task == FinetuneTask::kSegmentation;
  Model model(config.model, derive_seed(seed, {kModelTag}));
  if (init) {
    auto enc = model.encoder_parameters();
    mae::restore_from_checkpoint(*init, enc);
  }
  mae::ClassificationHead<float> cls_head(config.model, derive_seed(seed, {kHeadTag}));
  mae::SegmentationHead<float> seg_head(config.model, derive_seed(seed, {kHeadTag}));
  auto head_params = seg ? seg_head.parameters() : cls_head.parameters();
  auto trainable = head_params.tensors();
  if (!ft.head_only) {
    for (const auto& t : model.encoder_parameters().tensors()) trainable.push_back(t);
  }
  adiff::AdamWOptions opt_options;
  opt_options.weight_decay = config.weight_decay;
  adiff::AdamW<float> optimizer(trainable, opt_options);
  Rng dropout_rng(derive_seed(seed, {kDropoutTag}));

  const auto train_clouds = seg ? with_parts(data.train, config.model.seg_dim) : data.train;
  const auto test_clouds = seg ? with_parts(data.test, config.model.seg_dim) : data.test;
  if (train_clouds.empty()) throw DataError(seg ? "no training clouds carry part labels" : "no training clouds");
  const std::size_t points = train_clouds[0].size();
  if (seg) {
    for (const auto* split : {&train_clouds, &test_clouds}) {
      for (const auto& c : *split) {
        if (c.size() != points) throw DataError("segmentation needs equal point counts per cloud");
      }
    }
  }

  const auto test_prepared = prepare_clouds(test_clouds, ft.test_rotation, derive_seed(seed, {kTestTag}),
                                            config.model, config.features, threads);
  const auto test_assign = seg ? seg_assignments(test_prepared) : std::vector<SegSample>{};

  // Forward for a batch; returns logits as [rows, classes] and the targets.
  auto forward = [&](const std::vector<mae::PreparedCloud>& prepared, const std::vector<SegSample>& assign,
                     std::span<const std::size_t> idx, bool train, std::vector<int>& targets) {
    const auto batch = batch_of(prepared, idx);
    const std::span<const mae::PreparedCloud* const> view(batch);
    mae::Encoding<float> enc;
    {
      // A frozen encoder runs in eval mode without recording a graph.
      std::optional<adiff::NoGradGuard> guard;
      if (ft.head_only) guard.emplace();
      enc = mae::encode_clouds(model, view, train && !ft.head_only);
    }
    targets.clear();
    if (!seg) {
      for (const auto* c : batch) targets.push_back(c->label);
      return cls_head(mae::block_concat_feature(enc), train, dropout_rng);
    }
    std::vector<std::vector<std::size_t>> a;
    for (auto i : idx) a.push_back(assign[i].assignment);
    for (const auto* c : batch) targets.insert(targets.end(), c->part_labels.begin(), c->part_labels.end());
    auto logits = seg_head(enc.output, one_hot(view, config.model.cls_dim), a, points, train, dropout_rng);
    return adiff::reshape(logits, Shape{batch.size() * points, config.model.seg_dim});
  };

  auto evaluate = [&](const std::vector<mae::PreparedCloud>& prepared, const std::vector<SegSample>& assign) {
    adiff::NoGradGuard no_grad;
    std::size_t correct = 0, total = 0;
    std::vector<std::size_t> idx(prepared.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<int> targets;
    for (std::size_t lo = 0; lo < prepared.size(); lo += kEvalBatch) {
      const std::size_t hi = std::min(prepared.size(), lo + kEvalBatch);
      const auto logits = forward(prepared, assign, std::span<const std::size_t>(idx.data() + lo, hi - lo), false, targets);
      const std::size_t c = logits.dim(1);
      for (std::size_t r = 0; r < targets.size(); ++r) {
        correct += argmax_row(logits.data().subspan(r * c, c)) == targets[r] ? 1 : 0;
      }
      total += targets.size();
    }
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  };

  const std::size_t n = train_clouds.size();
  const std::size_t per_epoch = batch_count(n, config.batch_size);
  const std::size_t total_steps = per_epoch * ft.epochs;
  std::size_t step = 0;
  FinetuneResult result;
  std::vector<mae::PreparedCloud> prepared;
  std::vector<SegSample> assign;
  for (std::size_t epoch = 0; epoch < ft.epochs; ++epoch) {
    if (epoch == 0 || config.train_rotation != RotationSetting::kAligned) {
      prepared = prepare_clouds(train_clouds, config.train_rotation, derive_seed(seed, {kRotationTag, epoch}),
                                config.model, config.features, threads);
      if (seg) assign = seg_assignments(prepared);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(seed, {kShuffleTag, epoch}));
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0, lr = 0.0;
    std::size_t correct = 0, total = 0;
    std::vector<int> targets;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(n, lo + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
      auto logits = forward(prepared, assign, idx, true, targets);
      auto loss = adiff::cross_entropy(logits, std::span<const int>(targets));
      const double value = loss.item();
      check_finite(value, step, "finetuning");
      const std::size_t c = logits.dim(1);
      for (std::size_t r = 0; r < targets.size(); ++r) {
        correct += argmax_row(logits.data().subspan(r * c, c)) == targets[r] ? 1 : 0;
      }
      total += targets.size();
      adiff::backward(loss);
      lr = adiff::cosine_lr(step, total_steps, ft.lr);
      optimizer.step(lr);
      optimizer.zero_grad();
      loss_sum += value * static_cast<double>(idx.size());
      ++step;
    }
    FinetuneEpoch stats;
    stats.epoch = epoch + 1;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.train_accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    stats.test_accuracy = test_prepared.empty() ? 0.0 : evaluate(test_prepared, test_assign);
    stats.lr = lr;
    result.epochs.push_back(stats);
  }
  result.checkpoint = model_checkpoint(model, step);
  mae::add_to_checkpoint(result.checkpoint, head_params);
  return result;
}

AblationRow probe_row(const RunConfig& config, Model& model, const Dataset& data, std::size_t threads) {
  const std::uint64_t seed = config.require_seed();
  const auto& ab = config.ablate;
  const auto train = prepare_clouds(data.train, ab.probe_train, derive_seed(seed, {kGridTag, 0, 9}),
                                    model.config(), config.features, threads);
  const auto test = prepare_clouds(data.test, ab.probe_test, derive_seed(seed, {kGridTag, 1, 9}),
                                   model.config(), config.features, threads);
  const auto p = probe::train_probe(frozen_features(model, train, config.probe.feature),
                                    Dataset::labels_of(data.train), data.num_classes(),
                                    probe_options(config, kGridTag));
  AblationRow row;
  row.accuracy = probe::accuracy(p, frozen_features(model, test, config.probe.feature), Dataset::labels_of(data.test));
  row.n_test = data.test.size();
  return row;
}

std::vector<AblationRow> run_ablation(const RunConfig& config, const Dataset& data, std::size_t threads) {
  RunConfig base = config;
  if (config.ablate.epochs > 0) base.epochs = config.ablate.epochs;
  std::vector<AblationRow> rows;
  auto train_and_probe = [&](const RunConfig& cfg, std::string sweep, std::string value) {
    const auto pre = pretrain(cfg, data, threads);
    auto model = model_from_checkpoint(pre.checkpoint);
    auto row = probe_row(cfg, model, data, threads);
    row.sweep = std::move(sweep);
    row.value = std::move(value);
    row.final_loss = pre.epochs.empty() ? 0.0 : pre.epochs.back().mean_loss;
    return row;
  };
  std::optional<AblationRow> full;
  for (double ratio : config.ablate.mask_ratios) {
    RunConfig cfg = base;
    cfg.model.mask_ratio = ratio;
    rows.push_back(train_and_probe(cfg, "mask_ratio", format_ratio(ratio)));
    if (ratio == base.model.mask_ratio && base.features.dropped_groups.empty()) full = rows.back();
  }
  if (!config.ablate.rilf_groups.empty()) {
    if (!full) full = train_and_probe(base, "rilf_drop", "none");
    full->sweep = "rilf_drop";
    full->value = "none";
    rows.push_back(*full);
    for (const auto& groups : config.ablate.rilf_groups) {
      RunConfig cfg = base;
      cfg.features.dropped_groups = groups;
      rows.push_back(train_and_probe(cfg, "rilf_drop", join_groups(groups)));
    }
  }
  return rows;
}

}  // namespace hfbri::app
