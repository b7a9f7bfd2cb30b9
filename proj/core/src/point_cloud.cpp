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
#include "hfbri/point_cloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "hfbri/error.hpp"

namespace hfbri {
namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line that is not blank; false at end of stream.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_real(const std::string& tok, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("invalid coordinate '" + tok + "'", line);
  }
  return v;
}

std::size_t parse_count(const std::string& tok, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("invalid count '" + tok + "'", line);
  }
  return v;
}

Vec3 parse_xyz(const std::vector<std::string>& toks, std::size_t line) {
  if (toks.size() < 3) throw ParseError("expected three coordinates", line);
  return {parse_real(toks[0], line), parse_real(toks[1], line), parse_real(toks[2], line)};
}

PointCloud read_off(LineReader& reader) {
  std::string line;
  if (!reader.next(line)) throw ParseError("missing OFF header", reader.line_no());
  auto toks = split_ws(line);
  if (toks.empty() || toks[0] != "OFF") throw ParseError("expected 'OFF' header", reader.line_no());
  // Counts may share the header line ("OFF 3 0 0").
  toks.erase(toks.begin());
  if (toks.empty()) {
    if (!reader.next(line)) throw ParseError("missing counts line", reader.line_no());
    toks = split_ws(line);
  }
  if (toks.size() < 2) throw ParseError("counts line needs 'V F E'", reader.line_no());
  const std::size_t n_vertices = parse_count(toks[0], reader.line_no());

  PointCloud cloud;
  cloud.points.reserve(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    if (!reader.next(line)) {
      throw ParseError("short read: expected " + std::to_string(n_vertices) + " vertices, got " +
                           std::to_string(i),
                       reader.line_no());
    }
    cloud.points.push_back(parse_xyz(split_ws(line), reader.line_no()));
  }
  return cloud;
}

PointCloud read_xyz(LineReader& reader) {
  PointCloud cloud;
  std::string line;
  while (reader.next(line)) {
    if (line.find_first_not_of(" \t") == line.find('#')) continue;
    cloud.points.push_back(parse_xyz(split_ws(line), reader.line_no()));
  }
  return cloud;
}

PointCloud read_ply(LineReader& reader) {
  std::string line;
  if (!reader.next(line) || split_ws(line) != std::vector<std::string>{"ply"}) {
    throw ParseError("expected 'ply' magic", reader.line_no());
  }
  std::size_t n_vertices = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::size_t vertex_elem_before = 0;  // rows of earlier elements to skip
  std::vector<std::string> props;
  bool format_ok = false;

  while (true) {
    if (!reader.next(line)) throw ParseError("unterminated PLY header", reader.line_no());
    auto toks = split_ws(line);
    if (toks[0] == "end_header") break;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii") {
        throw ParseError("only ASCII PLY is supported", reader.line_no());
      }
      format_ok = true;
    } else if (toks[0] == "element") {
      if (toks.size() < 3) throw ParseError("malformed element line", reader.line_no());
      const std::size_t count = parse_count(toks[2], reader.line_no());
      in_vertex = toks[1] == "vertex";
      if (in_vertex) {
        n_vertices = count;
        seen_vertex = true;
      } else if (!seen_vertex) {
        vertex_elem_before += count;
      }
    } else if (toks[0] == "property") {
      if (in_vertex) {
        if (toks.size() >= 2 && toks[1] == "list") {
          throw ParseError("list properties on vertices are not supported", reader.line_no());
        }
        if (toks.size() < 3) throw ParseError("malformed property line", reader.line_no());
        props.push_back(toks.back());
      }
    } else if (toks[0] != "comment" && toks[0] != "obj_info") {
      throw ParseError("unknown header keyword '" + toks[0] + "'", reader.line_no());
    }
  }
  if (!format_ok) throw ParseError("missing format line", reader.line_no());
  if (!seen_vertex) throw ParseError("no vertex element", reader.line_no());

  auto find_prop = [&](const char* name) -> std::size_t {
    auto it = std::find(props.begin(), props.end(), name);
    if (it == props.end()) {
      throw ParseError(std::string("vertex element lacks property '") + name + "'",
                       reader.line_no());
    }
    return static_cast<std::size_t>(it - props.begin());
  };
  const std::size_t ix = find_prop("x");
  const std::size_t iy = find_prop("y");
  const std::size_t iz = find_prop("z");

  for (std::size_t i = 0; i < vertex_elem_before; ++i) {
    if (!reader.next(line)) throw ParseError("short read in element data", reader.line_no());
  }

  PointCloud cloud;
  cloud.points.reserve(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    if (!reader.next(line)) {
      throw ParseError("short read: expected " + std::to_string(n_vertices) +
                           " vertex lines, got " + std::to_string(i),
                       reader.line_no());
    }
    const auto toks = split_ws(line);
    if (toks.size() < props.size()) {
      throw ParseError("vertex line has " + std::to_string(toks.size()) + " values, expected " +
                           std::to_string(props.size()),
                       reader.line_no());
    }
    cloud.points.push_back({parse_real(toks[ix], reader.line_no()),
                            parse_real(toks[iy], reader.line_no()),
                            parse_real(toks[iz], reader.line_no())});
  }
  return cloud;
}

}  // namespace

void validate(const PointCloud& cloud) {
  if (cloud.points.empty()) throw DataError("point cloud is empty");
  for (const auto& p : cloud.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw DataError("point cloud has a non-finite coordinate");
    }
  }
  if (cloud.part_labels && cloud.part_labels->size() != cloud.points.size()) {
    throw DataError("part label count does not match point count");
  }
}

CloudFormat format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".off") return CloudFormat::kOff;
  if (ext == ".ply") return CloudFormat::kPlyAscii;
  if (ext == ".xyz" || ext == ".txt") return CloudFormat::kXyz;
  throw DataError("cannot infer point cloud format from '" + path.string() + "'");
}

CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "off") return CloudFormat::kOff;
  if (name == "ply" || name == "ply_ascii") return CloudFormat::kPlyAscii;
  if (name == "xyz") return CloudFormat::kXyz;
  throw ConfigError("unknown point cloud format '" + std::string(name) + "'");
}

PointCloud read_point_cloud(std::istream& in, CloudFormat format) {
  LineReader reader(in);
  PointCloud cloud;
  switch (format) {
    case CloudFormat::kOff:
      cloud = read_off(reader);
      break;
    case CloudFormat::kPlyAscii:
      cloud = read_ply(reader);
      break;
    case CloudFormat::kXyz:
      cloud = read_xyz(reader);
      break;
  }
  if (cloud.points.empty()) throw DataError("point cloud has zero vertices");
  return cloud;
}

PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return read_point_cloud(in, format);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
  return load_point_cloud(path, format_from_extension(path));
}

void write_point_cloud(std::ostream& out, const PointCloud& cloud, CloudFormat format) {
  out << std::setprecision(17);
  switch (format) {
    case CloudFormat::kOff:
      out << "OFF\n" << cloud.size() << " 0 0\n";
      break;
    case CloudFormat::kPlyAscii:
      out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
          << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
      break;
    case CloudFormat::kXyz:
      break;
  }
  for (const auto& p : cloud.points) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
}

void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                      CloudFormat format) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_point_cloud(out, cloud, format);
}

Vec3 centroid(std::span<const Vec3> points) {
  Vec3 sum;
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : sum / static_cast<double>(points.size());
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
  PointCloud out = cloud;
  if (out.points.empty()) return out;
  const Vec3 c = centroid(cloud.points);
  double max_sq = 0.0;
  for (auto& p : out.points) {
    p -= c;
    max_sq = std::max(max_sq, squared_norm(p));
  }
  const double scale = std::sqrt(max_sq);
  if (scale == 0.0) {
    std::fill(out.points.begin(), out.points.end(), Vec3{});
    return out;
  }
  for (auto& p : out.points) p = p / scale;
  return out;
}

}  // namespace hfbri
