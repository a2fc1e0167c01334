/*
 * Copyright 2026 The lidarprior Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIDARPRIOR_IO_HPP
#define LIDARPRIOR_IO_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lidarprior/core.hpp"
#include "lidarprior/error.hpp"
#include "lidarprior/text.hpp"

namespace lidarprior::io {

enum class CloudFormat { kKittiBin, kPlyAscii };

inline CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "kitti_bin" || name == "bin") return CloudFormat::kKittiBin;
  if (name == "ply_ascii" || name == "ply") return CloudFormat::kPlyAscii;
  throw InputError("unknown cloud format '" + std::string(name) + "'");
}

inline CloudFormat format_from_extension(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".bin") return CloudFormat::kKittiBin;
  if (ext == ".ply") return CloudFormat::kPlyAscii;
  throw InputError("cannot infer cloud format from extension of '" + path + "'");
}

// ---------------------------------------------------------------------------
// kitti_bin: headerless little-endian float32 quadruples (x, y, z, intensity).
// ---------------------------------------------------------------------------

inline constexpr std::size_t kKittiRecordBytes = 16;

namespace detail {

inline float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

inline void write_f32_le(float v, std::string& out) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

}  // namespace detail

inline PointCloud decode_kitti_bin(std::string_view bytes) {
  if (bytes.size() % kKittiRecordBytes != 0) {
    const std::size_t whole = bytes.size() / kKittiRecordBytes * kKittiRecordBytes;
    throw ParseError("kitti_bin: truncated record at byte offset " + std::to_string(whole) +
                     " (trailing " + std::to_string(bytes.size() - whole) + " bytes)");
  }
  const std::size_t n = bytes.size() / kKittiRecordBytes;
  PointCloud cloud;
  cloud.points.reserve(n);
  std::vector<float> intensity;
  intensity.reserve(n);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = data + i * kKittiRecordBytes;
    cloud.points.emplace_back(detail::read_f32_le(rec), detail::read_f32_le(rec + 4),
                              detail::read_f32_le(rec + 8));
    intensity.push_back(detail::read_f32_le(rec + 12));
  }
  cloud.intensity = std::move(intensity);
  return cloud;
}

/// Coordinates are narrowed to float32; missing intensity is written as 0.
inline std::string encode_kitti_bin(const PointCloud& cloud) {
  std::string out;
  out.reserve(cloud.size() * kKittiRecordBytes);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    detail::write_f32_le(static_cast<float>(p.x()), out);
    detail::write_f32_le(static_cast<float>(p.y()), out);
    detail::write_f32_le(static_cast<float>(p.z()), out);
    detail::write_f32_le(cloud.intensity ? (*cloud.intensity)[i] : 0.0F, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ply_ascii: a single `vertex` element of scalar properties.
// ---------------------------------------------------------------------------

struct PlyProperty {
  std::string type;  // float, double, int, uchar, ...
  std::string name;
};

struct PlyTable {
  std::vector<PlyProperty> properties;
  std::vector<std::vector<double>> columns;  // one per property
  std::vector<std::string> comments;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < properties.size(); ++i) {
      if (properties[i].name == name) return i;
    }
    return std::nullopt;
  }

  const std::vector<double>& column(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) throw ParseError("ply: missing property '" + std::string(name) + "'");
    return columns[*idx];
  }

  void add_column(std::string type, std::string name, std::vector<double> values) {
    properties.push_back({std::move(type), std::move(name)});
    columns.push_back(std::move(values));
  }
};

namespace detail {

inline bool is_float_type(std::string_view t) {
  return t == "float" || t == "float32" || t == "double" || t == "float64";
}

inline bool is_scalar_type(std::string_view t) {
  static constexpr std::string_view kTypes[] = {
      "char", "uchar", "short", "ushort", "int",     "uint",    "float",
      "double", "int8", "uint8", "int16", "uint16", "int32", "uint32", "float32",
      "float64"};
  return std::find(std::begin(kTypes), std::end(kTypes), t) != std::end(kTypes);
}

}  // namespace detail

inline PlyTable parse_ply_ascii(std::string_view content) {
  PlyTable table;
  std::size_t pos = 0;
  int line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= content.size()) return false;
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    line = content.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    ++line_no;
    return true;
  };
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("ply line " + std::to_string(line_no) + ": " + msg);
  };

  std::string_view line;
  if (!next_line(line) || text::trim(line) != "ply") throw fail("missing 'ply' magic");
  if (!next_line(line) || text::trim(line) != "format ascii 1.0") {
    throw fail("only 'format ascii 1.0' is supported");
  }
  std::optional<std::size_t> vertex_count;
  bool header_done = false;
  while (next_line(line)) {
    auto toks = text::split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "comment" || toks[0] == "obj_info") {
      auto rest = text::trim(line.substr(toks[0].size()));
      table.comments.emplace_back(rest);
      continue;
    }
    if (toks[0] == "end_header") {
      header_done = true;
      break;
    }
    if (toks[0] == "element") {
      if (toks.size() != 3) throw fail("malformed element line");
      if (toks[1] != "vertex" || vertex_count) {
        throw fail("unsupported element '" + std::string(toks[1]) + "'");
      }
      vertex_count = static_cast<std::size_t>(text::parse_int(toks[2], "vertex count"));
      continue;
    }
    if (toks[0] == "property") {
      if (!vertex_count) throw fail("property before element");
      if (toks.size() != 3 || !detail::is_scalar_type(toks[1])) {
        throw fail("unsupported property declaration");
      }
      table.properties.push_back({std::string(toks[1]), std::string(toks[2])});
      continue;
    }
    throw fail("unexpected header keyword '" + std::string(toks[0]) + "'");
  }
  if (!header_done) throw fail("missing end_header");
  if (!vertex_count) throw fail("no vertex element");
  for (const char* axis : {"x", "y", "z"}) {
    auto idx = table.index_of(axis);
    if (!idx) throw fail(std::string("vertex lacks property ") + axis);
    if (!detail::is_float_type(table.properties[*idx].type)) {
      throw fail(std::string("property ") + axis + " must be float");
    }
  }
  table.columns.assign(table.properties.size(), {});
  for (auto& c : table.columns) c.reserve(*vertex_count);
  for (std::size_t r = 0; r < *vertex_count; ++r) {
    if (!next_line(line)) throw fail("expected " + std::to_string(*vertex_count) +
                                     " vertices, file ends after " + std::to_string(r));
    auto toks = text::split_ws(line);
    if (toks.size() != table.properties.size()) {
      throw fail("expected " + std::to_string(table.properties.size()) + " values, got " +
                 std::to_string(toks.size()));
    }
    for (std::size_t c = 0; c < toks.size(); ++c) {
      table.columns[c].push_back(text::parse_double(toks[c], "ply value"));
    }
  }
  while (next_line(line)) {
    if (!text::trim(line).empty()) throw fail("trailing data after vertex list");
  }
  return table;
}

inline std::string format_ply_ascii(const PlyTable& table) {
  std::string out = "ply\nformat ascii 1.0\n";
  for (const auto& c : table.comments) out += "comment " + c + "\n";
  out += "element vertex " + std::to_string(table.rows()) + "\n";
  for (const auto& p : table.properties) out += "property " + p.type + " " + p.name + "\n";
  out += "end_header\n";
  const std::size_t n = table.rows();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out.push_back(' ');
      out += text::format_double(table.columns[c][r]);
    }
    out.push_back('\n');
  }
  return out;
}

inline PointCloud cloud_from_ply(const PlyTable& table) {
  PointCloud cloud;
  const auto& xs = table.column("x");
  const auto& ys = table.column("y");
  const auto& zs = table.column("z");
  cloud.points.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) cloud.points.emplace_back(xs[i], ys[i], zs[i]);
  if (auto idx = table.index_of("intensity")) {
    std::vector<float> inten;
    inten.reserve(xs.size());
    for (double v : table.columns[*idx]) inten.push_back(static_cast<float>(v));
    cloud.intensity = std::move(inten);
  }
  return cloud;
}

/// Base table (x, y, z [, intensity]) to which callers append label columns.
inline PlyTable ply_from_cloud(const PointCloud& cloud) {
  PlyTable t;
  std::vector<double> xs, ys, zs;
  xs.reserve(cloud.size());
  ys.reserve(cloud.size());
  zs.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    xs.push_back(p.x());
    ys.push_back(p.y());
    zs.push_back(p.z());
  }
  t.add_column("float", "x", std::move(xs));
  t.add_column("float", "y", std::move(ys));
  t.add_column("float", "z", std::move(zs));
  if (cloud.intensity) {
    t.add_column("float", "intensity",
                 std::vector<double>(cloud.intensity->begin(), cloud.intensity->end()));
  }
  return t;
}

// ---------------------------------------------------------------------------
// File entry points.
// ---------------------------------------------------------------------------

inline PointCloud load_cloud(const std::string& path, CloudFormat format) {
  const std::string bytes = text::read_file(path);
  switch (format) {
    case CloudFormat::kKittiBin:
      try {
        return decode_kitti_bin(bytes);
      } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
      }
    case CloudFormat::kPlyAscii:
      try {
        return cloud_from_ply(parse_ply_ascii(bytes));
      } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
      }
  }
  throw InputError("unknown cloud format");
}

inline PointCloud load_cloud(const std::string& path) {
  return load_cloud(path, format_from_extension(path));
}

inline void save_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
  if (format == CloudFormat::kKittiBin) {
    text::write_file(path, encode_kitti_bin(cloud));
  } else {
    text::write_file(path, format_ply_ascii(ply_from_cloud(cloud)));
  }
}

// ---------------------------------------------------------------------------
// Pose track: `timestamp tx ty tz yaw pitch roll` per line.
// ---------------------------------------------------------------------------

struct StampedPose {
  double timestamp = 0.0;
  Pose pose;
};

inline std::vector<StampedPose> parse_pose_track(std::string_view content) {
  std::vector<StampedPose> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto toks = text::split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 7) {
      throw ParseError("pose track line " + std::to_string(line_no) + ": expected 7 fields, got " +
                       std::to_string(toks.size()));
    }
    StampedPose sp;
    const std::string what = "pose track line " + std::to_string(line_no);
    sp.timestamp = text::parse_double(toks[0], what);
    sp.pose.translation = {text::parse_double(toks[1], what), text::parse_double(toks[2], what),
                           text::parse_double(toks[3], what)};
    sp.pose.yaw = text::parse_double(toks[4], what);
    sp.pose.pitch = text::parse_double(toks[5], what);
    sp.pose.roll = text::parse_double(toks[6], what);
    out.push_back(sp);
  }
  return out;
}

inline std::vector<StampedPose> load_pose_track(const std::string& path) {
  try {
    return parse_pose_track(text::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline std::string format_pose_track(const std::vector<StampedPose>& poses) {
  std::string out;
  for (const auto& sp : poses) {
    const auto& t = sp.pose.translation;
    const double fields[] = {sp.timestamp, t.x(),         t.y(),        t.z(),
                             sp.pose.yaw,  sp.pose.pitch, sp.pose.roll};
    for (std::size_t i = 0; i < std::size(fields); ++i) {
      if (i) out.push_back(' ');
      out += text::format_double(fields[i]);
    }
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame manifest: a `poses: <path>` header line, then one cloud path per line.
// Relative paths resolve against the manifest's directory.
// ---------------------------------------------------------------------------

struct Manifest {
  std::string poses_path;
  std::vector<std::string> cloud_paths;
};

inline Manifest load_manifest(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string_view p) {
    std::filesystem::path fp{std::string(p)};
    return (fp.is_absolute() ? fp : base / fp).lexically_normal().string();
  };
  Manifest m;
  int line_no = 0;
  for (const auto& raw : text::read_lines(path)) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.starts_with("poses:")) {
      if (!m.poses_path.empty()) {
        throw ParseError(path + ": duplicate 'poses:' header at line " + std::to_string(line_no));
      }
      auto p = text::trim(line.substr(6));
      if (p.empty()) throw ParseError(path + ": empty 'poses:' path");
      m.poses_path = resolve(p);
      continue;
    }
    m.cloud_paths.push_back(resolve(line));
  }
  // A manifest with no entries at all is a valid, empty sequence.
  if (m.poses_path.empty() && !m.cloud_paths.empty()) {
    throw ParseError(path + ": manifest lacks a 'poses:' header");
  }
  return m;
}

inline std::string format_manifest(const std::string& poses_path,
                                   const std::vector<std::string>& cloud_paths) {
  std::string out = "poses: " + poses_path + "\n";
  for (const auto& p : cloud_paths) out += p + "\n";
  return out;
}

/// Loads every cloud listed in the manifest and pairs it with its pose.
inline FrameSequence load_frames(const Manifest& manifest) {
  if (manifest.poses_path.empty() && manifest.cloud_paths.empty()) return {};
  const auto poses = load_pose_track(manifest.poses_path);
  if (poses.size() != manifest.cloud_paths.size()) {
    throw InputError("manifest lists " + std::to_string(manifest.cloud_paths.size()) +
                     " clouds but pose track has " + std::to_string(poses.size()) + " poses");
  }
  FrameSequence seq;
  seq.frames.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    Frame f;
    f.cloud = load_cloud(manifest.cloud_paths[i]);
    f.cloud.frame_id = i;
    f.cloud.timestamp = poses[i].timestamp;
    f.pose = poses[i].pose;
    seq.frames.push_back(std::move(f));
  }
  seq.validate();
  return seq;
}

}  // namespace lidarprior::io

#endif  // LIDARPRIOR_IO_HPP
