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

#ifndef LIDARPRIOR_PLOT_HPP
#define LIDARPRIOR_PLOT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lidarprior/error.hpp"
#include "lidarprior/ground.hpp"
#include "lidarprior/io.hpp"
#include "lidarprior/text.hpp"

namespace lidarprior::plot {

/// Histogram plus the road line fitted to it, if any.
struct VDisparityPlot {
  ground::VDisparityHistogram histogram;
  std::optional<ground::RoadLine> line;
};

// vdisp v1:
//   vdisp v1 <rows> <bins> <delta_max>
//   line <slope> <intercept> <tolerance>   |   line none
//   <bins counts>                          (one line per row)
inline std::string format_vdisp(const VDisparityPlot& p) {
  const auto& h = p.histogram;
  std::string out = "vdisp v1 " + std::to_string(h.rows) + ' ' + std::to_string(h.bins) + ' ' +
                    text::format_double(h.delta_max) + '\n';
  if (p.line) {
    out += "line " + text::format_double(p.line->slope) + ' ' +
           text::format_double(p.line->intercept) + ' ' +
           text::format_double(p.line->tolerance) + '\n';
  } else {
    out += "line none\n";
  }
  for (std::size_t r = 0; r < h.rows; ++r) {
    for (std::size_t b = 0; b < h.bins; ++b) {
      if (b) out += ' ';
      out += std::to_string(h.at(r, b));
    }
    out += '\n';
  }
  return out;
}

inline VDisparityPlot parse_vdisp(std::string_view content) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < content.size();) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.empty()) throw ParseError("vdisp: empty file");
  const auto head = text::split_ws(lines[0]);
  if (head.size() < 2 || head[0] != "vdisp") throw ParseError("vdisp: missing header");
  if (head[1] != "v1") {
    throw VersionError("vdisp: found version '" + std::string(head[1]) +
                       "', supported version 'v1'");
  }
  if (head.size() != 5) throw ParseError("vdisp: header needs rows, bins and delta_max");
  VDisparityPlot p;
  auto& h = p.histogram;
  const auto rows = text::parse_int(head[2], "vdisp rows");
  const auto bins = text::parse_int(head[3], "vdisp bins");
  if (rows < 0 || bins < 0) throw ParseError("vdisp: negative dimensions");
  h.rows = static_cast<std::size_t>(rows);
  h.bins = static_cast<std::size_t>(bins);
  h.delta_max = text::parse_double(head[4], "vdisp delta_max");
  if (lines.size() < 2 + h.rows) throw ParseError("vdisp: truncated file");
  const auto lt = text::split_ws(lines[1]);
  if (lt.size() == 2 && lt[0] == "line" && lt[1] == "none") {
    p.line.reset();
  } else if (lt.size() == 4 && lt[0] == "line") {
    p.line = ground::RoadLine{text::parse_double(lt[1], "vdisp line slope"),
                              text::parse_double(lt[2], "vdisp line intercept"),
                              text::parse_double(lt[3], "vdisp line tolerance")};
  } else {
    throw ParseError("vdisp: malformed line record");
  }
  h.counts.reserve(h.rows * h.bins);
  for (std::size_t r = 0; r < h.rows; ++r) {
    const auto t = text::split_ws(lines[2 + r]);
    if (t.size() != h.bins) {
      throw ParseError("vdisp row " + std::to_string(r) + ": expected " +
                       std::to_string(h.bins) + " counts");
    }
    for (auto tok : t) {
      const auto v = text::parse_int(tok, "vdisp count");
      if (v < 0) throw ParseError("vdisp: negative count");
      h.counts.push_back(static_cast<std::uint32_t>(v));
    }
  }
  return p;
}

/**
 * Heat map with bins on x and rows on y (row 0 at the top), log-scaled
 * grey levels, and the road line as a single polyline.
 */
inline std::string render_vdisp_svg(const VDisparityPlot& p, int cell = 4) {
  const auto& h = p.histogram;
  const int w = std::max<int>(1, static_cast<int>(h.bins) * cell);
  const int ht = std::max<int>(1, static_cast<int>(h.rows) * cell);
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
                    "\" height=\"" + std::to_string(ht) + "\" viewBox=\"0 0 " +
                    std::to_string(w) + ' ' + std::to_string(ht) + "\">\n";
  out += "<rect class=\"background\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(ht) + "\" fill=\"#000000\"/>\n";
  std::uint32_t peak = 0;
  for (auto c : h.counts) peak = std::max(peak, c);
  out += "<g class=\"heatmap\">\n";
  if (peak > 0) {
    const double norm = std::log1p(static_cast<double>(peak));
    for (std::size_t r = 0; r < h.rows; ++r) {
      for (std::size_t b = 0; b < h.bins; ++b) {
        const auto c = h.at(r, b);
        if (c == 0) continue;
        const int level =
            static_cast<int>(std::lround(255.0 * std::log1p(static_cast<double>(c)) / norm));
        char color[8];
        std::snprintf(color, sizeof color, "#%02x%02x%02x", level, level, level);
        out += "<rect x=\"" + std::to_string(static_cast<int>(b) * cell) + "\" y=\"" +
               std::to_string(static_cast<int>(r) * cell) + "\" width=\"" +
               std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" +
               color + "\"/>\n";
      }
    }
  }
  out += "</g>\n";
  if (p.line && h.rows > 0 && h.bins > 0) {
    const double bw = h.bin_width();
    auto px = [&](double row) { return text::format_fixed(p.line->at(row) / bw * cell, 2); };
    auto py = [&](double row) { return text::format_fixed((row + 0.5) * cell, 2); };
    const double last = static_cast<double>(h.rows - 1);
    out += "<polyline class=\"road-line\" fill=\"none\" stroke=\"#ff3030\" stroke-width=\"1.5\" "
           "points=\"" +
           px(0.0) + ',' + py(0.0) + ' ' + px(last) + ',' + py(last) + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

/// Fixed palette indexed by integer label; negative labels map to grey.
inline std::array<std::uint8_t, 3> label_color(int label) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 8> kPalette = {{
      {120, 120, 120},  // 0
      {60, 180, 75},    // 1
      {0, 130, 200},    // 2
      {245, 130, 48},   // 3
      {230, 25, 75},    // 4
      {145, 30, 180},   // 5
      {70, 240, 240},   // 6
      {210, 245, 60},   // 7
  }};
  if (label < 0) return {90, 90, 90};
  return kPalette[static_cast<std::size_t>(label) % kPalette.size()];
}

/// Adds red/green/blue columns from the named integer label property.
inline io::PlyTable colorize_labels(io::PlyTable table, std::string_view label_property) {
  const auto& labels = table.column(label_property);
  std::vector<double> r(labels.size()), g(labels.size()), b(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = label_color(static_cast<int>(std::lround(labels[i])));
    r[i] = c[0];
    g[i] = c[1];
    b[i] = c[2];
  }
  for (const char* name : {"red", "green", "blue"}) {
    if (table.index_of(name)) throw InputError(std::string("ply already has a ") + name + " property");
  }
  table.add_column("uchar", "red", std::move(r));
  table.add_column("uchar", "green", std::move(g));
  table.add_column("uchar", "blue", std::move(b));
  return table;
}

/// First label-like property present: fg_label, label, stage_rejected.
inline std::optional<std::string> find_label_property(const io::PlyTable& table) {
  for (const char* name : {"fg_label", "label", "stage_rejected"}) {
    if (table.index_of(name)) return std::string(name);
  }
  return std::nullopt;
}

}  // namespace lidarprior::plot

#endif  // LIDARPRIOR_PLOT_HPP
