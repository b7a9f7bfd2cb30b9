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
#include "hfbri/app/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hfbri/error.hpp"
#include "json.hpp"

namespace hfbri::app {
namespace {

using nlohmann::json;

// Walks one JSON object, consuming keys; leftover keys are reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = "") const {
    const std::string p = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
    return p.empty() ? "config" : "'" + p + "'";
  }

  template <typename U>
  void read(const std::string& key, U& out) {
    const json* v = get(key);
    if (!v) return;
    try {
      out = v->get<U>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  void read_size(const std::string& key, std::size_t& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      throw ConfigError(where(key) + " must be a non-negative integer");
    }
    out = v->get<std::size_t>();
  }

  void read_number(const std::string& key, double& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
    out = v->get<double>();
  }

  std::optional<std::string> read_string(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key()));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<RotationSetting> read_settings(ObjectReader& r, const std::string& key,
                                           std::vector<RotationSetting> fallback) {
  const json* v = r.get(key);
  if (!v) return fallback;
  if (!v->is_array() || v->empty()) throw ConfigError(r.where(key) + " must be a non-empty array");
  std::vector<RotationSetting> out;
  for (const auto& e : *v) {
    if (!e.is_string()) throw ConfigError(r.where(key) + " entries must be strings");
    out.push_back(parse_setting(e.get<std::string>()));
  }
  return out;
}

void parse_model(const json& j, mae::ModelConfig& m) {
  ObjectReader r(j, "model");
  if (auto s = r.read_string("scale")) {
    m = mae::parse_scale(*s) == mae::ScaleTag::kFull ? mae::ModelConfig::full() : mae::ModelConfig::desk();
    m.scale = mae::parse_scale(*s);
  }
  r.read_size("embed_dim", m.embed_dim);
  r.read_size("encoder_blocks", m.encoder_blocks);
  r.read_size("decoder_blocks", m.decoder_blocks);
  r.read_size("heads", m.heads);
  r.read_size("n_patches", m.n_patches);
  r.read_size("points_per_patch", m.points_per_patch);
  r.read_number("mask_ratio", m.mask_ratio);
  r.read_size("cls_dim", m.cls_dim);
  r.read_size("seg_dim", m.seg_dim);
  r.finish();
}

void parse_data(const json& j, DataConfig& d) {
  ObjectReader r(j, "data");
  if (auto kind = r.read_string("kind")) {
    if (*kind == "synthetic") {
      d.kind = DataKind::kSynthetic;
    } else if (*kind == "directory") {
      d.kind = DataKind::kDirectory;
    } else {
      throw ConfigError("'data.kind' must be synthetic or directory, got '" + *kind + "'");
    }
  }
  if (const json* shapes = r.get("shapes")) {
    if (!shapes->is_array() || shapes->empty()) throw ConfigError("'data.shapes' must be a non-empty array");
    d.shapes.clear();
    for (const auto& s : *shapes) {
      if (!s.is_string()) throw ConfigError("'data.shapes' entries must be strings");
      d.shapes.push_back(parse_shape(s.get<std::string>()));
    }
  }
  r.read_size("train_per_class", d.train_per_class);
  r.read_size("test_per_class", d.test_per_class);
  r.read_size("points", d.points);
  if (auto p = r.read_string("path")) d.path = *p;
  if (auto f = r.read_string("format")) d.format = parse_cloud_format(*f);
  r.finish();
  if (d.kind == DataKind::kDirectory && d.path.empty()) throw ConfigError("'data.path' is required for directory data");
}

void parse_features(const json& j, FeatureOptions& f) {
  ObjectReader r(j, "features");
  r.read_size("lra_neighbors", f.lra_neighbors);
  r.read_number("sign_threshold", f.sign_threshold);
  if (const json* g = r.get("drop_groups")) {
    if (!g->is_array()) throw ConfigError("'features.drop_groups' must be an array");
    f.dropped_groups.clear();
    for (const auto& e : *g) {
      if (!e.is_string()) throw ConfigError("'features.drop_groups' entries must be strings");
      f.dropped_groups.push_back(parse_group(e.get<std::string>()));
    }
  }
  r.finish();
}

void parse_probe(const json& j, ProbeConfig& p) {
  ObjectReader r(j, "probe");
  r.read_size("epochs", p.epochs);
  r.read_number("lr", p.lr);
  r.read_number("l2", p.l2);
  if (auto f = r.read_string("feature")) {
    if (*f == "pooled") {
      p.feature = ProbeFeature::kPooled;
    } else if (*f == "block_concat") {
      p.feature = ProbeFeature::kBlockConcat;
    } else {
      throw ConfigError("'probe.feature' must be pooled or block_concat, got '" + *f + "'");
    }
  }
  p.train_settings = read_settings(r, "train_settings", p.train_settings);
  p.test_settings = read_settings(r, "test_settings", p.test_settings);
  r.finish();
}

void parse_fewshot(const json& j, FewShotConfig& f) {
  ObjectReader r(j, "fewshot");
  r.read_size("ways", f.ways);
  r.read_size("shots", f.shots);
  r.read_size("queries", f.queries);
  r.read_size("episodes", f.episodes);
  if (auto s = r.read_string("setting")) f.setting = parse_setting(*s);
  r.finish();
}

void parse_finetune(const json& j, FinetuneConfig& f) {
  ObjectReader r(j, "finetune");
  if (auto t = r.read_string("task")) {
    if (*t == "classification") {
      f.task = FinetuneTask::kClassification;
    } else if (*t == "segmentation") {
      f.task = FinetuneTask::kSegmentation;
    } else {
      throw ConfigError("'finetune.task' must be classification or segmentation, got '" + *t + "'");
    }
  }
  r.read("head_only", f.head_only);
  r.read_size("epochs", f.epochs);
  r.read_number("lr", f.lr);
  if (auto s = r.read_string("test_rotation")) f.test_rotation = parse_setting(*s);
  r.finish();
}

void parse_ablate(const json& j, AblateConfig& a) {
  ObjectReader r(j, "ablate");
  if (const json* m = r.get("mask_ratios")) {
    if (!m->is_array()) throw ConfigError("'ablate.mask_ratios' must be an array");
    a.mask_ratios.clear();
    for (const auto& e : *m) {
      if (!e.is_number()) throw ConfigError("'ablate.mask_ratios' entries must be numbers");
      a.mask_ratios.push_back(e.get<double>());
    }
  }
  if (const json* g = r.get("rilf_groups")) {
    if (!g->is_array()) throw ConfigError("'ablate.rilf_groups' must be an array of arrays");
    a.rilf_groups.clear();
    for (const auto& set : *g) {
      if (!set.is_array()) throw ConfigError("'ablate.rilf_groups' must be an array of arrays");
      std::vector<RilfGroup> groups;
      for (const auto& e : set) {
        if (!e.is_string()) throw ConfigError("'ablate.rilf_groups' entries must be strings");
        groups.push_back(parse_group(e.get<std::string>()));
      }
      a.rilf_groups.push_back(std::move(groups));
    }
  }
  r.read_size("epochs", a.epochs);
  if (auto s = r.read_string("probe_train")) a.probe_train = parse_setting(*s);
  if (auto s = r.read_string("probe_test")) a.probe_test = parse_setting(*s);
  r.finish();
}

json settings_json(const std::vector<RotationSetting>& s) {
  json out = json::array();
  for (auto v : s) out.push_back(std::string(setting_name(v)));
  return out;
}

json groups_json(const std::vector<RilfGroup>& g) {
  json out = json::array();
  for (auto v : g) out.push_back(std::string(group_name(v)));
  return out;
}

}  // namespace

std::string_view task_name(FinetuneTask task) {
  return task == FinetuneTask::kSegmentation ? "segmentation" : "classification";
}

RunConfig parse_run_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  ObjectReader r(j, "");
  if (const json* m = r.get("model")) {
    parse_model(*m, c.model);
    c.model_given = true;
  }
  if (const json* d = r.get("data")) parse_data(*d, c.data);
  if (auto s = r.read_string("train_rotation")) c.train_rotation = parse_setting(*s);
  r.read_size("epochs", c.epochs);
  r.read_size("batch_size", c.batch_size);
  r.read_number("lr", c.lr);
  r.read_number("weight_decay", c.weight_decay);
  if (const json* s = r.get("seed")) {
    if (!s->is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
    c.seed = s->get<std::uint64_t>();
  }
  if (auto o = r.read_string("output")) c.output = *o;
  r.read_size("checkpoint_every", c.checkpoint_every);
  if (const json* f = r.get("features")) parse_features(*f, c.features);
  if (const json* p = r.get("probe")) parse_probe(*p, c.probe);
  if (const json* f = r.get("fewshot")) parse_fewshot(*f, c.fewshot);
  if (const json* f = r.get("finetune")) parse_finetune(*f, c.finetune);
  if (const json* a = r.get("ablate")) parse_ablate(*a, c.ablate);
  if (const json* e = r.get("extract")) {
    ObjectReader er(*e, "extract");
    er.read_size("max_clouds", c.extract.max_clouds);
    er.finish();
  }
  r.finish();

  c.model.validate();
  if (c.batch_size == 0) throw ConfigError("'batch_size' must be positive");
  if (!(c.lr > 0.0)) throw ConfigError("'lr' must be positive");
  if (c.data.kind == DataKind::kSynthetic) {
    if (c.data.points < c.model.n_patches || c.data.points < c.model.points_per_patch) {
      throw ConfigError("'data.points' (" + std::to_string(c.data.points) +
                        ") must be at least n_patches and points_per_patch");
    }
    if (c.data.shapes.size() > c.model.cls_dim) {
      throw ConfigError("'model.cls_dim' (" + std::to_string(c.model.cls_dim) + ") is smaller than the " +
                        std::to_string(c.data.shapes.size()) + " synthetic classes");
    }
  }
  for (double m : c.ablate.mask_ratios) mae::masked_count(c.model.n_patches, m);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string RunConfig::canonical_json() const {
  json j;
  j["model"] = {{"embed_dim", model.embed_dim},           {"encoder_blocks", model.encoder_blocks},
                {"decoder_blocks", model.decoder_blocks}, {"heads", model.heads},
                {"n_patches", model.n_patches},           {"points_per_patch", model.points_per_patch},
                {"mask_ratio", model.mask_ratio},         {"cls_dim", model.cls_dim},
                {"seg_dim", model.seg_dim},               {"scale", std::string(mae::scale_name(model.scale))}};
  json shapes = json::array();
  for (auto s : data.shapes) shapes.push_back(std::string(shape_name(s)));
  j["data"] = {{"kind", data.kind == DataKind::kSynthetic ? "synthetic" : "directory"},
               {"shapes", shapes},
               {"train_per_class", data.train_per_class},
               {"test_per_class", data.test_per_class},
               {"points", data.points},
               {"path", data.path.generic_string()}};
  if (data.format) {
    constexpr const char* kFormatNames[] = {"off", "ply", "xyz"};
    j["data"]["format"] = kFormatNames[static_cast<int>(*data.format)];
  }
  j["train_rotation"] = std::string(setting_name(train_rotation));
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["weight_decay"] = weight_decay;
  if (seed) j["seed"] = *seed;
  j["checkpoint_every"] = checkpoint_every;
  j["features"] = {{"lra_neighbors", features.lra_neighbors},
                   {"sign_threshold", features.sign_threshold},
                   {"drop_groups", groups_json(features.dropped_groups)}};
  j["probe"] = {{"epochs", probe.epochs},
                {"lr", probe.lr},
                {"l2", probe.l2},
                {"feature", probe.feature == ProbeFeature::kPooled ? "pooled" : "block_concat"},
                {"train_settings", settings_json(probe.train_settings)},
                {"test_settings", settings_json(probe.test_settings)}};
  j["fewshot"] = {{"ways", fewshot.ways},
                  {"shots", fewshot.shots},
                  {"queries", fewshot.queries},
                  {"episodes", fewshot.episodes},
                  {"setting", std::string(setting_name(fewshot.setting))}};
  j["finetune"] = {{"task", std::string(task_name(finetune.task))},
                   {"head_only", finetune.head_only},
                   {"epochs", finetune.epochs},
                   {"lr", finetune.lr},
                   {"test_rotation", std::string(setting_name(finetune.test_rotation))}};
  json groups = json::array();
  for (const auto& g : ablate.rilf_groups) groups.push_back(groups_json(g));
  j["ablate"] = {{"mask_ratios", ablate.mask_ratios},
                 {"rilf_groups", groups},
                 {"epochs", ablate.epochs},
                 {"probe_train", std::string(setting_name(ablate.probe_train))},
                 {"probe_test", std::string(setting_name(ablate.probe_test))}};
  j["extract"] = {{"max_clouds", extract.max_clouds}};
  return j.dump();  // object keys are sorted, so the dump is canonical
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required: set \"seed\" in the config or pass --seed");
  return *seed;
}

}  // namespace hfbri::app
