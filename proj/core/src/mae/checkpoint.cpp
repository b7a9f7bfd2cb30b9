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
#include "hfbri/mae/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hfbri/error.hpp"

namespace hfbri::mae {
namespace {

constexpr std::array<char, 4> kMagic{'H', 'F', 'B', 'M'};

template <typename U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
bool get_le(std::istream& in, U& v) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return true;
}

template <typename U>
U require_le(std::istream& in, const char* what) {
  U v;
  if (!get_le(in, v)) throw DataError(std::string("checkpoint truncated while reading ") + what);
  return v;
}

}  // namespace

template <typename T>
void add_to_checkpoint(Checkpoint& ckpt, const adiff::ParameterSet<T>& set) {
  for (const auto& p : set.parameters) {
    TensorRecord rec{p.tensor.shape(), {}};
    rec.values.reserve(p.tensor.numel());
    for (T v : p.tensor.data()) rec.values.push_back(static_cast<float>(v));
    ckpt.tensors[p.name] = std::move(rec);
  }
  for (const auto& b : set.buffers) {
    TensorRecord rec{adiff::Shape{b.values->size()}, {}};
    for (T v : *b.values) rec.values.push_back(static_cast<float>(v));
    ckpt.tensors[b.name] = std::move(rec);
  }
}

template <typename T>
void restore_from_checkpoint(const Checkpoint& ckpt, adiff::ParameterSet<T>& set) {
  auto find = [&](const std::string& name, const adiff::Shape& shape) -> const TensorRecord& {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw ConfigError("checkpoint is missing tensor '" + name + "'");
    if (it->second.shape != shape) {
      throw ConfigError("checkpoint tensor '" + name + "' has shape " + adiff::to_string(it->second.shape) +
                        ", model expects " + adiff::to_string(shape));
    }
    return it->second;
  };
  for (auto& p : set.parameters) {
    const auto& rec = find(p.name, p.tensor.shape());
    auto dst = p.tensor.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(rec.values[i]);
  }
  for (auto& b : set.buffers) {
    const auto& rec = find(b.name, adiff::Shape{b.values->size()});
    for (std::size_t i = 0; i < b.values->size(); ++i) (*b.values)[i] = static_cast<T>(rec.values[i]);
  }
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(out, kCheckpointVersion);
  const std::string text = ckpt.config.to_text() + "step=" + std::to_string(ckpt.step) + "\n";
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, rec] : ckpt.tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.shape.size()));
    for (auto e : rec.shape) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e));
    for (float v : rec.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw DataError("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto version = require_le<std::uint16_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto text_len = require_le<std::uint32_t>(in, "config length");
  std::string text(text_len, '\0');
  if (!in.read(text.data(), text_len)) throw DataError("checkpoint truncated in config block");

  Checkpoint ckpt;
  // Split off the step line; the rest is the model config.
  std::istringstream lines(text);
  std::string line, model_text;
  bool have_step = false;
  while (std::getline(lines, line)) {
    if (line.rfind("step=", 0) == 0) {
      ckpt.step = std::stoull(line.substr(5));
      have_step = true;
    } else {
      model_text += line + "\n";
    }
  }
  if (!have_step) throw DataError("checkpoint config block lacks a step line");
  ckpt.config = ModelConfig::from_text(model_text);

  while (true) {
    std::uint32_t name_len;
    if (!get_le(in, name_len)) break;
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("checkpoint truncated in tensor name");
    const auto rank = require_le<std::uint32_t>(in, "rank");
    TensorRecord rec;
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      rec.shape.push_back(require_le<std::uint32_t>(in, "extent"));
      count *= rec.shape.back();
    }
    rec.values.resize(count);
    for (auto& v : rec.values) v = std::bit_cast<float>(require_le<std::uint32_t>(in, "tensor values"));
    ckpt.tensors.emplace(std::move(name), std::move(rec));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  return read_checkpoint(in);
}

template void add_to_checkpoint(Checkpoint&, const adiff::ParameterSet<float>&);
template void add_to_checkpoint(Checkpoint&, const adiff::ParameterSet<double>&);
template void restore_from_checkpoint(const Checkpoint&, adiff::ParameterSet<float>&);
template void restore_from_checkpoint(const Checkpoint&, adiff::ParameterSet<double>&);

}  // namespace hfbri::mae
