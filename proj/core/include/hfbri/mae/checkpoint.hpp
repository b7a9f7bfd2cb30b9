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

// Binary checkpoint layout (all integers little-endian):
//   "HFBM" | u16 version | u32 n | n bytes of key=value config text
//   then records until end of file:
//   u32 name_len | name (UTF-8) | u32 rank | rank x u32 extents | f32 values
// The config text is ModelConfig::to_text() plus a "step=<n>" line.
// Batch-norm running statistics are stored as ordinary records.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hfbri/adiff/nn.hpp"
#include "hfbri/mae/config.hpp"

namespace hfbri::mae {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct TensorRecord {
  adiff::Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  ModelConfig config;
  std::uint64_t step = 0;
  std::map<std::string, TensorRecord> tensors;
};

// Snapshots parameters and buffers of one or more parameter sets.
template <typename T>
void add_to_checkpoint(Checkpoint& ckpt, const adiff::ParameterSet<T>& set);

// Copies every parameter and buffer of `set` from the checkpoint. Missing
// names or shape mismatches throw ConfigError; extra records are ignored.
template <typename T>
void restore_from_checkpoint(const Checkpoint& ckpt, adiff::ParameterSet<T>& set);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hfbri::mae
