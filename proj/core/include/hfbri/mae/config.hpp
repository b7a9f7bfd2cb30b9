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
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hfbri::mae {

enum class ScaleTag { kDesk, kFull };

std::string_view scale_name(ScaleTag tag);
ScaleTag parse_scale(std::string_view name);

struct ModelConfig {
  std::size_t embed_dim = 64;
  std::size_t encoder_blocks = 3;
  std::size_t decoder_blocks = 2;
  std::size_t heads = 4;
  std::size_t n_patches = 32;
  std::size_t points_per_patch = 16;
  double mask_ratio = 0.6;
  std::size_t cls_dim = 4;  // object classes; also the width of the label one-hot
  std::size_t seg_dim = 3;  // part classes
  ScaleTag scale = ScaleTag::kDesk;

  static ModelConfig desk();
  static ModelConfig full();

  // Throws ConfigError on violated invariants.
  void validate() const;

  std::size_t n_masked() const;
  std::size_t n_visible() const { return n_patches - n_masked(); }

  // Hidden widths of the classification MLP and of the segmentation
  // pointwise stack.
  std::vector<std::size_t> head_hidden() const;
  // Width of the concatenated per-block classification input.
  std::size_t cls_input_dim() const { return encoder_blocks * embed_dim; }
  // Width of the segmentation concatenation: two pooled 3D streams + labels.
  std::size_t seg_concat_dim() const { return 6 * embed_dim + kSegLabelWidth; }

  static constexpr std::size_t kSegLabelWidth = 64;

  // "key=value" lines in a fixed order; from_text accepts exactly that set.
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);

  // Names of fields that differ, for actionable mismatch errors.
  std::vector<std::string> diff(const ModelConfig& other) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// round(ratio * n) clamped so at least one patch stays visible and one is
// masked. Throws ConfigError when no split is possible.
std::size_t masked_count(std::size_t n_patches, double ratio);

}  // namespace hfbri::mae
