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
#include "hfbri/mae/config.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "hfbri/error.hpp"

namespace hfbri::mae {

std::string_view scale_name(ScaleTag tag) { return tag == ScaleTag::kFull ? "full" : "desk"; }

ScaleTag parse_scale(std::string_view name) {
  if (name == "desk") return ScaleTag::kDesk;
  if (name == "full") return ScaleTag::kFull;
  throw ConfigError("unknown scale tag '" + std::string(name) + "' (expected desk or full)");
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.embed_dim = 384;
  c.encoder_blocks = 12;
  c.decoder_blocks = 4;
  c.heads = 8;
  c.n_patches = 256;
  c.points_per_patch = 64;
  c.mask_ratio = 0.6;
  c.cls_dim = 40;
  c.seg_dim = 50;
  c.scale = ScaleTag::kFull;
  return c;
}

std::size_t masked_count(std::size_t n_patches, double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw ConfigError("mask_ratio must lie in [0, 1), got " + std::to_string(ratio));
  }
  if (n_patches < 2) throw ConfigError("masking needs at least 2 patches");
  auto m = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n_patches)));
  if (m < 1) m = 1;
  if (m > n_patches - 1) m = n_patches - 1;
  return m;
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("model config: " + what);
  };
  require(embed_dim > 0 && heads > 0, "embed_dim and heads must be positive");
  require(embed_dim % heads == 0, "embed_dim " + std::to_string(embed_dim) +
                                      " is not divisible by heads " + std::to_string(heads));
  require(encoder_blocks > 0, "encoder_blocks must be positive");
  require(decoder_blocks > 0, "decoder_blocks must be positive");
  require(n_patches >= 2, "n_patches must be at least 2");
  require(points_per_patch >= 1, "points_per_patch must be positive");
  require(cls_dim >= 1 && seg_dim >= 1, "cls_dim and seg_dim must be positive");
  masked_count(n_patches, mask_ratio);
}

std::size_t ModelConfig::n_masked() const { return masked_count(n_patches, mask_ratio); }

std::vector<std::size_t> ModelConfig::head_hidden() const {
  if (scale == ScaleTag::kFull) return {512, 256};
  return {128, 64};
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "embed_dim=" << embed_dim << "\n"
      << "encoder_blocks=" << encoder_blocks << "\n"
      << "decoder_blocks=" << decoder_blocks << "\n"
      << "heads=" << heads << "\n"
      << "n_patches=" << n_patches << "\n"
      << "points_per_patch=" << points_per_patch << "\n"
      << "mask_ratio=" << mask_ratio << "\n"
      << "cls_dim=" << cls_dim << "\n"
      << "seg_dim=" << seg_dim << "\n"
      << "scale=" << scale_name(scale) << "\n";
  return out.str();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("model config: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  ModelConfig c;
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("model config: missing key '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto take_size = [&](const std::string& key) {
    const std::string v = take(key);
    try {
      return static_cast<std::size_t>(std::stoull(v));
    } catch (const std::exception&) {
      throw ConfigError("model config: bad integer for '" + key + "': " + v);
    }
  };
  c.embed_dim = take_size("embed_dim");
  c.encoder_blocks = take_size("encoder_blocks");
  c.decoder_blocks = take_size("decoder_blocks");
  c.heads = take_size("heads");
  c.n_patches = take_size("n_patches");
  c.points_per_patch = take_size("points_per_patch");
  {
    const std::string v = take("mask_ratio");
    try {
      c.mask_ratio = std::stod(v);
    } catch (const std::exception&) {
      throw ConfigError("model config: bad number for 'mask_ratio': " + v);
    }
  }
  c.cls_dim = take_size("cls_dim");
  c.seg_dim = take_size("seg_dim");
  c.scale = parse_scale(take("scale"));
  if (!kv.empty()) throw ConfigError("model config: unknown key '" + kv.begin()->first + "'");
  return c;
}

std::vector<std::string> ModelConfig::diff(const ModelConfig& other) const {
  std::vector<std::string> out;
  auto check = [&](bool same, const char* name) {
    if (!same) out.emplace_back(name);
  };
  check(embed_dim == other.embed_dim, "embed_dim");
  check(encoder_blocks == other.encoder_blocks, "encoder_blocks");
  check(decoder_blocks == other.decoder_blocks, "decoder_blocks");
  check(heads == other.heads, "heads");
  check(n_patches == other.n_patches, "n_patches");
  check(points_per_patch == other.points_per_patch, "points_per_patch");
  check(mask_ratio == other.mask_ratio, "mask_ratio");
  check(cls_dim == other.cls_dim, "cls_dim");
  check(seg_dim == other.seg_dim, "seg_dim");
  check(scale == other.scale, "scale");
  return out;
}

}  // namespace hfbri::mae
