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
#include "hfbri/app/commands.hpp"

#include <fstream>
#include <sstream>

#include "hfbri/app/csv.hpp"
#include "hfbri/app/dataset.hpp"
#include "hfbri/app/training.hpp"
#include "hfbri/error.hpp"
#include "hfbri/geom.hpp"
#include "hfbri/mae/checkpoint.hpp"
#include "hfbri/rihf.hpp"

namespace hfbri::app {
namespace {

namespace fs = std::filesystem;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_output(const fs::path& path) {
  ensure_dir(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return out;
}

void write_config_copy(const RunConfig& config) {
  auto out = open_output(config.output / "config.json");
  out << config.canonical_json() << '\n';
}

// Pretrained model when --checkpoint is given, otherwise the seeded random
// initialization (the random-weight baseline).
Model model_for(const CommandOptions& options, RunConfig& config, std::ostream& log) {
  if (!options.checkpoint) {
    log << "no --checkpoint given; using randomly initialized weights\n";
    return initial_model(config);
  }
  const auto ckpt = mae::load_checkpoint(*options.checkpoint);
  reconcile_model(config, ckpt.config);
  return model_from_checkpoint(ckpt);
}

void write_grid(const RunConfig& config, const std::vector<probe::GridCell>& cells, const fs::path& path,
                std::ostream& log) {
  auto out = open_output(path);
  probe::write_grid_csv(out, cells, config.require_seed(), config.hash());
  for (const auto& c : cells) {
    log << setting_name(c.train) << "/" << setting_name(c.test) << " accuracy " << format_fixed(c.accuracy)
        << '\n';
  }
  log << "wrote " << path.string() << '\n';
}

void write_feature_csvs(const PointCloud& cloud, const RunConfig& config, const fs::path& rilf_path,
                        const fs::path& rigf_path) {
  const auto patches = patchify(cloud.view(), config.model.n_patches, config.model.points_per_patch);
  const auto features = extract_features(cloud, patches, config.features);
  auto rilf = open_output(rilf_path);
  write_csv_row(rilf, {"patch_id", "point_id", "d", "alpha0", "alpha1", "alpha2", "phi", "beta0", "beta1", "beta2"});
  for (std::size_t p = 0; p < features.rilf.size(); ++p) {
    const auto& m = features.rilf[p];
    for (std::size_t r = 0; r < m.rows; ++r) {
      std::vector<std::string> row{std::to_string(p), std::to_string(features.point_ids[p][r])};
      for (double v : m.row(r)) row.push_back(format_real(v));
      write_csv_row(rilf, row);
    }
  }
  write_csv_metadata(rilf, config.require_seed(), config.hash());
  auto rigf = open_output(rigf_path);
  write_csv_row(rigf, {"patch_id", "center_id", "d_p", "d_pm", "d_sm", "alpha", "beta"});
  for (std::size_t p = 0; p < features.rigf.size(); ++p) {
    std::vector<std::string> row{std::to_string(p), std::to_string(patches.centers[p])};
    for (double v : features.rigf[p].values) row.push_back(format_real(v));
    write_csv_row(rigf, row);
  }
  write_csv_metadata(rigf, config.require_seed(), config.hash());
}

std::string checkpoint_name(std::size_t epoch) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "checkpoint_epoch%04zu.hfbm", epoch);
  return buf;
}

}  // namespace

RunConfig resolve_config(const CommandOptions& options) {
  RunConfig config = options.config ? load_run_config(*options.config) : RunConfig{};
  if (options.seed) config.seed = options.seed;
  if (options.out) config.output = *options.out;
  if (options.threads == 0) throw ConfigError("--threads must be at least 1");
  config.require_seed();
  return config;
}

void reconcile_model(RunConfig& config, const mae::ModelConfig& checkpoint_model) {
  if (!config.model_given) {
    config.model = checkpoint_model;
    return;
  }
  const auto fields = config.model.diff(checkpoint_model);
  if (fields.empty()) return;
  std::string list;
  for (const auto& f : fields) list += (list.empty() ? "" : ", ") + f;
  throw ConfigError("checkpoint model config differs from the run config in: " + list);
}

void cmd_pretrain(const CommandOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options);
  if (options.checkpoint) throw ConfigError("pretrain starts from scratch and does not take --checkpoint");
  const Dataset data = load_dataset(config.data, config.require_seed());
  ensure_dir(config.output);
  write_config_copy(config);
  std::ostringstream metrics, timing;
  write_csv_row(metrics, {"epoch", "mean_loss", "lr"});
  write_csv_row(timing, {"epoch", "wall_seconds"});
  std::size_t steps = 0;
  const std::size_t per_epoch = (data.train.size() + config.batch_size - 1) / config.batch_size;
  auto on_epoch = [&](const EpochStats& s, Model& model) {
    steps += per_epoch;
    write_csv_row(metrics, {std::to_string(s.epoch), format_real(s.mean_loss), format_real(s.lr)});
    write_csv_row(timing, {std::to_string(s.epoch), format_real(s.wall_seconds)});
    log << "epoch " << s.epoch << " loss " << format_real(s.mean_loss) << " lr " << format_real(s.lr) << " ("
        << format_real(s.wall_seconds) << " s)\n";
    if (config.checkpoint_every > 0 && s.epoch % config.checkpoint_every == 0) {
      mae::save_checkpoint(config.output / checkpoint_name(s.epoch), model_checkpoint(model, steps));
    }
  };
  const auto result = pretrain(config, data, options.threads, on_epoch);
  mae::save_checkpoint(config.output / "checkpoint.hfbm", result.checkpoint);
  write_csv_metadata(metrics, config.require_seed(), config.hash());
  write_csv_metadata(timing, config.require_seed(), config.hash());
  open_output(config.output / "metrics.csv") << metrics.str();
  open_output(config.output / "timing.csv") << timing.str();
  log << "wrote " << (config.output / "checkpoint.hfbm").string() << '\n';
}

void cmd_probe(const CommandOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options);
  Model model = model_for(options, config, log);
  const Dataset data = load_dataset(config.data, config.require_seed());
  write_grid(config, run_grid(config, model, data, options.threads), config.output / "probe.csv", log);
}

void cmd_eval_grid(const CommandOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options);
  const std::vector<RotationSetting> all{RotationSetting::kAligned, RotationSetting::kZ,
                                         RotationSetting::kRandom};
  config.probe.train_settings = all;
  config.probe.test_settings = all;
  Model model = model_for(options, config, log);
  const Dataset data = load_dataset(config.data, config.require_seed());
  write_grid(config, run_grid(config, model, data, options.threads), config.output / "grid.csv", log);
}

void cmd_fewshot(const CommandOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options);
  Model model = model_for(options, config, log);
  const Dataset data = load_dataset(config.data, config.require_seed());
  const auto result = run_fewshot(config, model, data, options.threads);
  auto out = open_output(config.output / "fewshot.csv");
  write_csv_row(out, {"episode", "accuracy", "stddev"});
  for (std::size_t e = 0; e < result.accuracies.size(); ++e) {
    write_csv_row(out, {std::to_string(e + 1), format_fixed(result.accuracies[e]), ""});
  }
  write_csv_row(out, {"mean", format_fixed(result.mean), format_fixed(result.stddev)});
  write_csv_metadata(out, config.require_seed(), config.hash());
  log << config.fewshot.ways << "-way " << config.fewshot.shots << "-shot: " << format_fixed(result.mean)
      << " +/- " << format_fixed(result.stddev) << " over " << result.accuracies.size() << " episodes\n";
}

void cmd_finetune(const CommandOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options);
  std::optional<mae::Checkpoint> init;
  if (options.checkpoint) {
    init = mae::load_checkpoint(*options.checkpoint);
    reconcile_model(config, init->config);
  } else {
    log << "no --checkpoint given; finetuning from random initialization\n";
  }
  const Dataset data = load_dataset(config.data, config.require_seed());
  const auto result = finetune(config, data, init ? &*init : nullptr, options.threads);
  auto out = open_output(config.output / "finetune.csv");
  write_csv_row(out, {"epoch", "train_loss", "train_accuracy", "test_accuracy", "lr"});
  for (const auto& e : result.epochs) {
    write_csv_row(out, {std::to_string(e.epoch), format_real(e.train_loss), format_fixed(e.train_accuracy),
                        format_fixed(e.test_accuracy), format_real(e.lr)});
    log << "epoch " << e.epoch << " loss " << format_real(e.train_loss) << " test "
        << format_fixed(e.test_accuracy) << '\n';
  }
  write_csv_metadata(out, config.require_seed(), config.hash());
  mae::save_checkpoint(config.output / "finetune.hfbm", result.checkpoint);
}

void cmd_extract_features(const CommandOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options);
  if (options.input) {
    PointCloud cloud = load_point_cloud(*options.input);
    validate(cloud);
    write_feature_csvs(cloud, config, config.output / "rilf.csv", config.output / "rigf.csv");
    log << "wrote features for " << options.input->string() << '\n';
    return;
  }
  const Dataset data = load_dataset(config.data, config.require_seed());
  const std::size_t n = std::min(config.extract.max_clouds, data.test.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto stem = "cloud" + std::to_string(i);
    write_feature_csvs(data.test[i], config, config.output / (stem + "_rilf.csv"),
                       config.output / (stem + "_rigf.csv"));
    save_point_cloud(config.output / (stem + ".xyz"), data.test[i], CloudFormat::kXyz);
  }
  log << "wrote features for " << n << " test clouds\n";
}

void cmd_ablate(const CommandOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options);
  if (options.checkpoint) throw ConfigError("ablate retrains per setting and does not take --checkpoint");
  const Dataset data = load_dataset(config.data, config.require_seed());
  const auto rows = run_ablation(config, data, options.threads);
  auto out = open_output(config.output / "ablation.csv");
  write_csv_row(out, {"sweep", "value", "accuracy", "final_loss", "n_test"});
  for (const auto& r : rows) {
    write_csv_row(out, {r.sweep, r.value, format_fixed(r.accuracy), format_real(r.final_loss),
                        std::to_string(r.n_test)});
    log << r.sweep << "=" << r.value << " accuracy " << format_fixed(r.accuracy) << '\n';
  }
  write_csv_metadata(out, config.require_seed(), config.hash());
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"pretrain", "probe",   "eval-grid", "fewshot",
                                              "finetune", "extract-features", "ablate"};
  return names;
}

void run_command(std::string_view name, const CommandOptions& options, std::ostream& log) {
  if (name == "pretrain") return cmd_pretrain(options, log);
  if (name == "probe") return cmd_probe(options, log);
  if (name == "eval-grid") return cmd_eval_grid(options, log);
  if (name == "fewshot") return cmd_fewshot(options, log);
  if (name == "finetune") return cmd_finetune(options, log);
  if (name == "extract-features") return cmd_extract_features(options, log);
  if (name == "ablate") return cmd_ablate(options, log);
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

int exit_code_for(const std::exception_ptr& error) {
  if (!error) return 0;
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError&) {
    return 2;
  } catch (const DataError&) {
    return 3;
  } catch (const ParseError&) {
    return 3;
  } catch (const SizeError&) {
    return 3;
  } catch (const NumericError&) {
    return 4;
  } catch (...) {
    return 1;
  }
}

}  // namespace hfbri::app
