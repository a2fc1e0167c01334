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

#ifndef LIDARPRIOR_OCCUPANCY_HPP
#define LIDARPRIOR_OCCUPANCY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lidarprior/core.hpp"
#include "lidarprior/error.hpp"
#include "lidarprior/text.hpp"

namespace lidarprior::occupancy {

struct GridIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  std::int64_t operator[](int axis) const { return axis == 0 ? i : axis == 1 ? j : k; }
  std::int64_t& operator[](int axis) { return axis == 0 ? i : axis == 1 ? j : k; }

  auto operator<=>(const GridIndex&) const = default;
};

struct GridIndexHash {
  std::size_t operator()(const GridIndex& g) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(g.i) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(g.j) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(g.k) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// log(p / (1 - p)).
inline double log_odds(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("log_odds: probability must lie in (0, 1), got " +
                      text::format_double(p));
  }
  return std::log(p / (1.0 - p));
}

inline double probability(double l) {
  if (l >= 0.0) return 1.0 / (1.0 + std::exp(-l));
  const double e = std::exp(l);
  return e / (1.0 + e);
}

struct OccupancyParams {
  double p_prior = 0.5;
  double p_free = 0.4;
  double p_occupied = 0.7;
  // Infinite bounds disable clamping.
  double l_min = -2.0;
  double l_max = 3.5;
  double voxel_size = 0.5;
  Point3 grid_origin = Point3::Zero();
  // Returns beyond this range only clear free space up to it.
  double max_range = 100.0;

  void validate() const {
    auto in_open_unit = [](double p) { return p > 0.0 && p < 1.0; };
    if (!in_open_unit(p_prior) || !in_open_unit(p_free) || !in_open_unit(p_occupied)) {
      throw InputError("occupancy: probabilities must lie in (0, 1)");
    }
    if (!(p_free < 0.5 && p_occupied > 0.5 && p_free < p_prior && p_prior < p_occupied)) {
      throw InputError("occupancy: need p_free < 0.5 < p_occupied and p_free < p_prior < p_occupied");
    }
    if (!(l_min < 0.0 && l_max > 0.0)) throw InputError("occupancy: need l_min < 0 < l_max");
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
      throw InputError("occupancy: voxel_size must be positive");
    }
    if (!(max_range > 0.0)) throw InputError("occupancy: max_range must be positive");
  }

  double l_prior() const { return log_odds(p_prior); }
  // Per-measurement increments: L(v|z) - L(v).
  double free_increment() const { return log_odds(p_free) - l_prior(); }
  double occupied_increment() const { return log_odds(p_occupied) - l_prior(); }
};

inline GridIndex index_of(const Point3& p, const OccupancyParams& params) {
  const Point3 u = (p - params.grid_origin) / params.voxel_size;
  return {static_cast<std::int64_t>(std::floor(u.x())),
          static_cast<std::int64_t>(std::floor(u.y())),
          static_cast<std::int64_t>(std::floor(u.z()))};
}

/**
 * Voxels crossed by the segment origin -> endpoint, in order.
 *
 * Parametric grid walk: for each axis track the ray parameter of the next
 * boundary crossing and advance along the axis whose crossing comes first.
 * Crossings that coincide (the segment passes exactly through an edge or a
 * corner) advance all tied axes at once, so voxels that are only touched at
 * that edge are not reported. An axis stops advancing once it reaches the
 * endpoint's index, which bounds the walk even under rounding.
 */
inline std::vector<GridIndex> traverse_cells(const Point3& origin, const Point3& endpoint,
                                             const OccupancyParams& params) {
  const Point3 ua = (origin - params.grid_origin) / params.voxel_size;
  const Point3 ub = (endpoint - params.grid_origin) / params.voxel_size;
  GridIndex cell = index_of(origin, params);
  const GridIndex end = index_of(endpoint, params);

  std::vector<GridIndex> out;
  out.push_back(cell);
  if (cell == end) return out;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const Point3 dir = ub - ua;
  std::array<int, 3> step{};
  std::array<double, 3> t_max{};
  std::array<double, 3> t_delta{};
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 0.0) {
      step[a] = 1;
      t_max[a] = (static_cast<double>(cell[a]) + 1.0 - ua[a]) / dir[a];
      t_delta[a] = 1.0 / dir[a];
    } else if (dir[a] < 0.0) {
      step[a] = -1;
      t_max[a] = (static_cast<double>(cell[a]) - ua[a]) / dir[a];
      t_delta[a] = -1.0 / dir[a];
    } else {
      t_max[a] = kInf;
      t_delta[a] = kInf;
    }
  }

  constexpr double kTieEps = 1e-12;
  while (cell != end) {
    double t_min = kInf;
    for (int a = 0; a < 3; ++a) {
      if (cell[a] != end[a]) t_min = std::min(t_min, t_max[a]);
    }
    if (t_min == kInf) break;
    for (int a = 0; a < 3; ++a) {
      if (cell[a] != end[a] && t_max[a] <= t_min + kTieEps) {
        cell[a] += step[a];
        t_max[a] += t_delta[a];
      }
    }
    out.push_back(cell);
  }
  return out;
}

struct ScanStats {
  std::size_t rays = 0;
  std::size_t skipped_nonfinite = 0;
  std::size_t truncated = 0;  // longer than max_range: free space only
  std::size_t free_cells = 0;
  std::size_t occupied_cells = 0;
};

enum class CellState { kFree, kOccupied, kUnknown };

/**
 * Sparse voxel map of log-odds occupancy.
 *
 * Cells absent from the map hold the prior. Each integrated scan applies at
 * most one update per cell: the occupied increment if any ray of the scan
 * ends in the cell, otherwise the free increment if any ray crosses it.
 */
class OccupancyGrid {
 public:
  using CellMap = std::unordered_map<GridIndex, double, GridIndexHash>;

  OccupancyGrid() = default;
  explicit OccupancyGrid(OccupancyParams params) : params_(std::move(params)) {
    params_.validate();
  }

  const OccupancyParams& params() const { return params_; }
  const CellMap& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }

  double log_odds_at(const GridIndex& idx) const {
    auto it = cells_.find(idx);
    return it == cells_.end() ? params_.l_prior() : it->second;
  }

  double probability_at(const GridIndex& idx) const { return probability(log_odds_at(idx)); }

  /// Adds `delta` to the cell's log-odds and clamps into [l_min, l_max].
  void add_log_odds(const GridIndex& idx, double delta) {
    auto [it, inserted] = cells_.try_emplace(idx, params_.l_prior());
    it->second = std::clamp(it->second + delta, params_.l_min, params_.l_max);
  }

  void set_log_odds(const GridIndex& idx, double value) {
    if (!(value >= params_.l_min && value <= params_.l_max)) {
      throw DomainError("occupancy: stored log-odds outside [l_min, l_max]");
    }
    cells_[idx] = value;
  }

  void update_occupied(const GridIndex& idx) { add_log_odds(idx, params_.occupied_increment()); }
  void update_free(const GridIndex& idx) { add_log_odds(idx, params_.free_increment()); }

  /// `cloud` must already be in the grid's (global) frame.
  ScanStats integrate_scan(const Point3& sensor_origin, const PointCloud& cloud) {
    ScanStats stats;
    std::unordered_set<GridIndex, GridIndexHash> hit;
    std::unordered_set<GridIndex, GridIndexHash> passed;
    for (const auto& p : cloud.points) {
      if (!is_finite(p)) {
        ++stats.skipped_nonfinite;
        continue;
      }
      ++stats.rays;
      const Point3 v = p - sensor_origin;
      const double len = v.norm();
      if (len > params_.max_range) {
        ++stats.truncated;
        const Point3 end = sensor_origin + v * (params_.max_range / len);
        for (const auto& c : traverse_cells(sensor_origin, end, params_)) passed.insert(c);
        continue;
      }
      const auto cells = traverse_cells(sensor_origin, p, params_);
      for (std::size_t i = 0; i + 1 < cells.size(); ++i) passed.insert(cells[i]);
      hit.insert(cells.back());
    }
    for (const auto& c : hit) update_occupied(c);
    for (const auto& c : passed) {
      if (!hit.contains(c)) {
        update_free(c);
        ++stats.free_cells;
      }
    }
    stats.occupied_cells = hit.size();
    return stats;
  }

  /**
   * Folds a grid built from a disjoint set of scans into this one.
   * Both grids carry the prior once, so it is subtracted once; clamping is
   * applied after the sum.
   */
  void merge(const OccupancyGrid& other) {
    const double l0 = params_.l_prior();
    for (const auto& [idx, l] : other.cells_) {
      auto [it, inserted] = cells_.try_emplace(idx, l0);
      it->second = std::clamp(it->second + l - l0, params_.l_min, params_.l_max);
    }
  }

  std::vector<std::pair<GridIndex, double>> sorted_cells() const {
    std::vector<std::pair<GridIndex, double>> out(cells_.begin(), cells_.end());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  bool operator==(const OccupancyGrid& other) const {
    return params_.voxel_size == other.params_.voxel_size &&
           params_.grid_origin == other.params_.grid_origin &&
           params_.l_min == other.params_.l_min && params_.l_max == other.params_.l_max &&
           cells_ == other.cells_;
  }

 private:
  OccupancyParams params_;
  CellMap cells_;
};

inline CellState occupancy_state(const OccupancyGrid& grid, const GridIndex& cell,
                                 double occ_threshold, double free_threshold) {
  if (free_threshold > occ_threshold) {
    throw DomainError("occupancy_state: free_threshold must not exceed occ_threshold");
  }
  const double l = grid.log_odds_at(cell);
  if (l > occ_threshold) return CellState::kOccupied;
  if (l < free_threshold) return CellState::kFree;
  return CellState::kUnknown;
}

// ---------------------------------------------------------------------------
// voxgrid v1 text format
//   voxgrid v1 <voxel_size> <ox> <oy> <oz> <l_min> <l_max>
//   i j k L        (one line per stored cell, sorted by index)
// ---------------------------------------------------------------------------

inline std::string format_voxgrid(const OccupancyGrid& grid) {
  const auto& p = grid.params();
  std::string out = "voxgrid v1";
  for (double v : {p.voxel_size, p.grid_origin.x(), p.grid_origin.y(), p.grid_origin.z(),
                   p.l_min, p.l_max}) {
    out += ' ';
    out += text::format_double(v);
  }
  out += '\n';
  for (const auto& [idx, l] : grid.sorted_cells()) {
    out += std::to_string(idx.i) + ' ' + std::to_string(idx.j) + ' ' + std::to_string(idx.k) +
           ' ' + text::format_double(l) + '\n';
  }
  return out;
}

/// Parses a header line and the given cell lines. Probabilities not carried
/// by the format keep their defaults.
inline OccupancyGrid parse_voxgrid(std::string_view header,
                                   const std::vector<std::string_view>& cell_lines) {
  auto toks = text::split_ws(header);
  if (toks.size() < 2 || toks[0] != "voxgrid") throw ParseError("voxgrid: missing header");
  if (toks[1] != "v1") {
    throw VersionError("voxgrid: unsupported version '" + std::string(toks[1]) +
                       "' (supported: v1)");
  }
  if (toks.size() != 8) throw ParseError("voxgrid: header needs 6 numeric fields");
  OccupancyParams params;
  params.voxel_size = text::parse_double(toks[2], "voxgrid voxel_size");
  params.grid_origin = {text::parse_double(toks[3], "voxgrid origin"),
                        text::parse_double(toks[4], "voxgrid origin"),
                        text::parse_double(toks[5], "voxgrid origin")};
  params.l_min = text::parse_double(toks[6], "voxgrid l_min");
  params.l_max = text::parse_double(toks[7], "voxgrid l_max");
  OccupancyGrid grid(params);
  for (auto line : cell_lines) {
    auto f = text::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 4) throw ParseError("voxgrid: cell line needs 'i j k L'");
    GridIndex idx{text::parse_int(f[0], "voxgrid i"), text::parse_int(f[1], "voxgrid j"),
                  text::parse_int(f[2], "voxgrid k")};
    grid.set_log_odds(idx, text::parse_double(f[3], "voxgrid L"));
  }
  return grid;
}

inline OccupancyGrid parse_voxgrid(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.empty()) throw ParseError("voxgrid: empty input");
  return parse_voxgrid(lines.front(), {lines.begin() + 1, lines.end()});
}

}  // namespace lidarprior::occupancy

#endif  // LIDARPRIOR_OCCUPANCY_HPP
