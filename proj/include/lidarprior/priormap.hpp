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

#ifndef LIDARPRIOR_PRIORMAP_HPP
#define LIDARPRIOR_PRIORMAP_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lidarprior/box.hpp"
#include "lidarprior/clustering.hpp"
#include "lidarprior/core.hpp"
#include "lidarprior/error.hpp"
#include "lidarprior/ground.hpp"
#include "lidarprior/occupancy.hpp"
#include "lidarprior/parallel.hpp"
#include "lidarprior/random.hpp"
#include "lidarprior/text.hpp"

namespace lidarprior {

/// Box plus the global cluster id it was fitted to.
struct MapBox {
  clustering::ClusterId source_id = 0;
  OrientedBox box;

  bool operator==(const MapBox&) const = default;
};

struct PriorMap {
  std::vector<ground::PlaneModel> ground_planes;
  std::vector<MapBox> planar_boxes;
  std::vector<MapBox> volumetric_boxes;
  std::optional<occupancy::OccupancyGrid> occupancy;
  std::uint64_t config_hash = 0;
  std::uint64_t frame_count = 0;

  const MapBox* find_planar(clustering::ClusterId id) const { return find(planar_boxes, id); }
  const MapBox* find_volumetric(clustering::ClusterId id) const {
    return find(volumetric_boxes, id);
  }

  void validate() const {
    for (const auto* list : {&planar_boxes, &volumetric_boxes}) {
      std::set<clustering::ClusterId> ids;
      for (const auto& b : *list) {
        if (!ids.insert(b.source_id).second) {
          throw InputError("prior map: duplicate box source id " + std::to_string(b.source_id));
        }
      }
    }
  }

  bool operator==(const PriorMap&) const = default;

 private:
  static const MapBox* find(const std::vector<MapBox>& list, clustering::ClusterId id) {
    for (const auto& b : list) {
      if (b.source_id == id) return &b;
    }
    return nullptr;
  }
};

enum class GroundMode { kRansac, kLidarHistogram };

struct MappingConfig {
  // Ground extraction.
  GroundMode ground_mode = GroundMode::kRansac;
  double ransac_threshold = 0.3;  // generous, tolerates mild road curvature
  std::size_t ransac_iterations = 200;
  std::size_t ransac_max_samples = 100000;  // hypothesis scoring subsample
  double ground_margin = 0.3;
  // Lidar-histogram ground mode (sensor model of the input scans).
  std::size_t hist_layers = 32;
  double hist_layer_min_deg = -25.0;
  double hist_layer_max_deg = 5.0;
  double hist_azimuth_step_deg = 0.2;
  std::size_t hist_bins = 160;
  double hist_delta_max = 0.5;
  std::size_t hist_top_k = 1;

  // Per-frame clustering and super-clustering.
  double eps = 0.7;
  std::size_t min_pts = 5;
  bool adaptive_eps = false;
  double cluster_max_range = 40.0;  // sensor-frame range cap for clustering
  double super_eps = 1.5;
  std::size_t super_min_pts = 1;
  std::size_t min_cluster_points = 30;  // over all frames of a global cluster

  // Shape features and boxes.
  double planarity_threshold = 0.6;
  clustering::FeatureOptions features;
  double trim_quantile = 0.02;

  // Occupancy grid.
  bool build_occupancy = false;
  occupancy::OccupancyParams occupancy;

  std::uint64_t seed = 0;
  std::size_t threads = 1;

  std::vector<double> hist_layer_angles() const {
    std::vector<double> a(hist_layers);
    for (std::size_t i = 0; i < hist_layers; ++i) {
      const double t = hist_layers == 1 ? 0.0
                                        : static_cast<double>(i) /
                                              static_cast<double>(hist_layers - 1);
      a[i] = deg_to_rad(hist_layer_min_deg + t * (hist_layer_max_deg - hist_layer_min_deg));
    }
    return a;
  }

  ground::LidarHistogramParams histogram_params() const {
    ground::LidarHistogramParams p;
    p.layer_angles = hist_layer_angles();
    p.azimuth_bin_width = deg_to_rad(hist_azimuth_step_deg);
    p.n_bins = hist_bins;
    p.delta_max = hist_delta_max;
    p.top_k_per_row = hist_top_k;
    return p;
  }

  void validate() const {
    auto require = [](bool ok, const char* field) {
      if (!ok) throw InputError(std::string("mapping config: invalid value for ") + field);
    };
    require(ransac_threshold > 0.0, "ransac_threshold");
    require(ransac_iterations > 0, "ransac_iterations");
    require(ground_margin >= 0.0, "ground_margin");
    require(eps > 0.0, "eps");
    require(min_pts >= 1, "min_pts");
    require(super_eps > 0.0, "super_eps");
    require(super_min_pts >= 1, "super_min_pts");
    require(cluster_max_range > 0.0, "cluster_max_range");
    require(planarity_threshold > 0.0 && planarity_threshold < 1.0, "planarity_threshold");
    require(trim_quantile >= 0.0 && trim_quantile <= 0.1, "trim_quantile");
    require(features.k_neighbors >= 3, "k_neighbors");
    require(features.downsample_voxel >= 0.0, "downsample_voxel");
    require(hist_layers >= 2, "hist_layers");
    require(hist_layer_min_deg < hist_layer_max_deg, "hist_layer_min_deg");
    require(hist_azimuth_step_deg > 0.0, "hist_azimuth_step_deg");
    require(hist_bins >= 2, "hist_bins");
    require(hist_delta_max > 0.0, "hist_delta_max");
    require(hist_top_k >= 1, "hist_top_k");
    require(threads >= 1, "threads");
    if (build_occupancy) occupancy.validate();
  }

  /// Canonical `key = value` listing; its hash fingerprints a map.
  std::string to_text() const {
    std::string out = "[mapping]\n";
    auto put = [&](std::string_view k, const std::string& v) {
      out += std::string(k) + " = " + v + "\n";
    };
    auto num = [](double v) { return text::format_double(v); };
    put("ground_mode", ground_mode == GroundMode::kRansac ? "ransac" : "histogram");
    put("ransac_threshold", num(ransac_threshold));
    put("ransac_iterations", std::to_string(ransac_iterations));
    put("ransac_max_samples", std::to_string(ransac_max_samples));
    put("ground_margin", num(ground_margin));
    put("hist_layers", std::to_string(hist_layers));
    put("hist_layer_min_deg", num(hist_layer_min_deg));
    put("hist_layer_max_deg", num(hist_layer_max_deg));
    put("hist_azimuth_step_deg", num(hist_azimuth_step_deg));
    put("hist_bins", std::to_string(hist_bins));
    put("hist_delta_max", num(hist_delta_max));
    put("hist_top_k", std::to_string(hist_top_k));
    put("eps", num(eps));
    put("min_pts", std::to_string(min_pts));
    put("adaptive_eps", adaptive_eps ? "true" : "false");
    put("cluster_max_range", num(cluster_max_range));
    put("super_eps", num(super_eps));
    put("super_min_pts", std::to_string(super_min_pts));
    put("min_cluster_points", std::to_string(min_cluster_points));
    put("planarity_threshold", num(planarity_threshold));
    put("planarity_mode", features.mode == clustering::PlanarityMode::kMeanPerPoint
                              ? "mean_per_point"
                              : "cluster_tensor");
    put("k_neighbors", std::to_string(features.k_neighbors));
    put("downsample_voxel", num(features.downsample_voxel));
    put("trim_quantile", num(trim_quantile));
    put("seed", std::to_string(seed));
    out += "[occupancy]\n";
    put("enabled", build_occupancy ? "true" : "false");
    put("p_prior", num(occupancy.p_prior));
    put("p_free", num(occupancy.p_free));
    put("p_occupied", num(occupancy.p_occupied));
    put("l_min", num(occupancy.l_min));
    put("l_max", num(occupancy.l_max));
    put("voxel_size", num(occupancy.voxel_size));
    put("max_range", num(occupancy.max_range));
    return out;
  }

  std::uint64_t hash() const { return text::fnv1a(to_text()); }

  /// Overrides fields from `[mapping]` and `[occupancy]` sections.
  void apply(const text::ConfigFile& cfg) {
    for (const auto& sec : cfg.sections) {
      if (sec.kind != "mapping" && sec.kind != "occupancy") continue;
      for (const auto& [key, value] : sec.entries) set(sec.kind, key, value);
    }
  }

  void set(std::string_view section, std::string_view key, const std::string& value) {
    const std::string what = std::string(section) + "." + std::string(key);
    auto d = [&] { return text::parse_double(value, what); };
    auto u = [&] {
      const auto v = text::parse_int(value, what);
      if (v < 0) throw InputError(what + ": must be non-negative");
      return static_cast<std::size_t>(v);
    };
    auto b = [&] {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw ParseError(what + ": expected true/false");
    };
    if (section == "occupancy") {
      if (key == "enabled") build_occupancy = b();
      else if (key == "p_prior") occupancy.p_prior = d();
      else if (key == "p_free") occupancy.p_free = d();
      else if (key == "p_occupied") occupancy.p_occupied = d();
      else if (key == "l_min") occupancy.l_min = d();
      else if (key == "l_max") occupancy.l_max = d();
      else if (key == "voxel_size") occupancy.voxel_size = d();
      else if (key == "max_range") occupancy.max_range = d();
      else throw InputError("unknown config key " + what);
      return;
    }
    if (key == "ground_mode") {
      if (value == "ransac") ground_mode = GroundMode::kRansac;
      else if (value == "histogram") ground_mode = GroundMode::kLidarHistogram;
      else throw ParseError(what + ": expected ransac or histogram");
    } else if (key == "ransac_threshold") ransac_threshold = d();
    else if (key == "ransac_iterations") ransac_iterations = u();
    else if (key == "ransac_max_samples") ransac_max_samples = u();
    else if (key == "ground_margin") ground_margin = d();
    else if (key == "hist_layers") hist_layers = u();
    else if (key == "hist_layer_min_deg") hist_layer_min_deg = d();
    else if (key == "hist_layer_max_deg") hist_layer_max_deg = d();
    else if (key == "hist_azimuth_step_deg") hist_azimuth_step_deg = d();
    else if (key == "hist_bins") hist_bins = u();
    else if (key == "hist_delta_max") hist_delta_max = d();
    else if (key == "hist_top_k") hist_top_k = u();
    else if (key == "eps") eps = d();
    else if (key == "min_pts") min_pts = u();
    else if (key == "adaptive_eps") adaptive_eps = b();
    else if (key == "cluster_max_range") cluster_max_range = d();
    else if (key == "super_eps") super_eps = d();
    else if (key == "super_min_pts") super_min_pts = u();
    else if (key == "min_cluster_points") min_cluster_points = u();
    else if (key == "planarity_threshold") planarity_threshold = d();
    else if (key == "planarity_mode") {
      if (value == "mean_per_point") features.mode = clustering::PlanarityMode::kMeanPerPoint;
      else if (value == "cluster_tensor") features.mode = clustering::PlanarityMode::kClusterTensor;
      else throw ParseError(what + ": expected mean_per_point or cluster_tensor");
    } else if (key == "k_neighbors") features.k_neighbors = u();
    else if (key == "downsample_voxel") features.downsample_voxel = d();
    else if (key == "trim_quantile") trim_quantile = d();
    else if (key == "seed") seed = u();
    else throw InputError("unknown config key " + what);
  }
};

/// Intermediate products of the mapping stage, exposed for inspection.
struct MappingReport {
  std::size_t total_points = 0;
  std::size_t ground_points = 0;
  std::size_t frame_clusters = 0;
  std::size_t global_clusters = 0;
  std::size_t dropped_small_clusters = 0;
  std::vector<double> global_cluster_planarity;  // indexed by global id
};

/**
 * Mapping stage: register every frame, strip the ground, cluster each frame,
 * merge per-frame clusters into global ones by clustering their centroids,
 * then fit a robust planar box or a minimum-volume box to each global
 * cluster depending on its mean planarity. Frames must be free of moving
 * objects.
 */
inline PriorMap build_prior_map(const FrameSequence& frames, const MappingConfig& config,
                                MappingReport* report = nullptr) {
  if (frames.empty()) throw PipelineError("build_prior_map: no frames");
  config.validate();
  frames.validate();
  const std::size_t nf = frames.size();
  MappingReport rep;

  // Registration.
  std::vector<PointCloud> global(nf);
  parallel_for(nf, config.threads, [&](std::size_t i) {
    global[i] = transform_to_global(frames.frames[i].cloud, frames.frames[i].pose);
  });

  // Ground extraction.
  PriorMap map;
  std::vector<std::vector<std::uint8_t>> is_ground(nf);
  if (config.ground_mode == GroundMode::kRansac) {
    std::vector<Point3> all;
    for (const auto& c : global) all.insert(all.end(), c.points.begin(), c.points.end());
    if (all.size() < 3) throw PipelineError("build_prior_map: fewer than 3 points in total");
    std::vector<std::uint32_t> subset;
    if (all.size() > config.ransac_max_samples) {
      Rng rng(derive_seed(config.seed, 0x6772));
      subset.reserve(config.ransac_max_samples);
      for (std::size_t i = 0; i < config.ransac_max_samples; ++i) {
        subset.push_back(static_cast<std::uint32_t>(rng.index(all.size())));
      }
    }
    const auto res = ground::ransac_plane(all, config.ransac_threshold, config.ransac_iterations,
                                          config.seed, subset);
    map.ground_planes.push_back(res.plane);
    for (std::size_t f = 0; f < nf; ++f) {
      auto& g = is_ground[f];
      g.resize(global[f].size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = std::abs(res.plane.signed_distance(global[f].points[i])) <= config.ground_margin;
      }
    }
  } else {
    const auto hp = config.histogram_params();
    parallel_for(nf, config.threads, [&](std::size_t f) {
      const auto seg = ground::segment_road(frames.frames[f].cloud, hp);
      auto& g = is_ground[f];
      g.resize(seg.point_labels.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = seg.point_labels[i] == ground::RoadLabel::kRoad;
      }
    });
    std::vector<Point3> road;
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t i = 0; i < is_ground[f].size(); ++i) {
        if (is_ground[f][i]) road.push_back(global[f].points[i]);
      }
    }
    if (road.size() < 3) throw PipelineError("build_prior_map: histogram found no road points");
    const auto res = ground::ransac_plane(road, config.ransac_threshold, config.ransac_iterations,
                                          config.seed);
    map.ground_planes.push_back(res.plane);
    // Road returns the straight road line misses (steep near layers) still
    // sit on the fitted plane.
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t i = 0; i < is_ground[f].size(); ++i) {
        if (std::abs(res.plane.signed_distance(global[f].points[i])) <= config.ground_margin) {
          is_ground[f][i] = 1;
        }
      }
    }
  }

  // Per-frame clustering of non-ground points within range.
  struct FrameWork {
    std::vector<Point3> points;
    std::vector<clustering::ClusterId> labels;
    std::int32_t n_clusters = 0;
    std::vector<Point3> centroids;
  };
  std::vector<FrameWork> work(nf);
  parallel_for(nf, config.threads, [&](std::size_t f) {
    auto& w = work[f];
    const auto& sensor = frames.frames[f].cloud.points;
    for (std::size_t i = 0; i < sensor.size(); ++i) {
      if (is_ground[f][i] || !is_finite(global[f].points[i])) continue;
      if (sensor[i].norm() > config.cluster_max_range) continue;
      w.points.push_back(global[f].points[i]);
    }
    const double eps =
        config.adaptive_eps ? clustering::adaptive_eps(w.points, config.eps) : config.eps;
    const auto res = clustering::dbscan_full(w.points, eps, config.min_pts);
    w.labels = res.labels;
    w.n_clusters = res.n_clusters;
    w.centroids.assign(static_cast<std::size_t>(res.n_clusters), Point3::Zero());
    std::vector<std::size_t> counts(static_cast<std::size_t>(res.n_clusters), 0);
    for (std::size_t i = 0; i < w.points.size(); ++i) {
      if (w.labels[i] == clustering::kNoise) continue;
      w.centroids[static_cast<std::size_t>(w.labels[i])] += w.points[i];
      ++counts[static_cast<std::size_t>(w.labels[i])];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
      w.centroids[c] /= static_cast<double>(counts[c]);
    }
  });
  for (std::size_t f = 0; f < nf; ++f) {
    rep.total_points += global[f].size();
    rep.ground_points += static_cast<std::size_t>(
        std::count(is_ground[f].begin(), is_ground[f].end(), std::uint8_t{1}));
  }

  // Super-clustering into globally consistent ids.
  std::vector<clustering::FrameCluster> fcs;
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t c = 0; c < work[f].centroids.size(); ++c) {
      fcs.push_back({frames.frames[f].cloud.frame_id, static_cast<clustering::ClusterId>(c),
                     work[f].centroids[c]});
    }
  }
  rep.frame_clusters = fcs.size();
  const auto gmap = clustering::super_cluster(fcs, config.super_eps, config.super_min_pts);
  clustering::ClusterId n_global = 0;
  for (const auto& [key, gid] : gmap) n_global = std::max(n_global, gid + 1);
  rep.global_clusters = static_cast<std::size_t>(n_global);

  std::vector<std::vector<Point3>> members(static_cast<std::size_t>(n_global));
  for (std::size_t f = 0; f < nf; ++f) {
    const auto fid = frames.frames[f].cloud.frame_id;
    for (std::size_t i = 0; i < work[f].points.size(); ++i) {
      const auto l = work[f].labels[i];
      if (l == clustering::kNoise) continue;
      members[static_cast<std::size_t>(gmap.at({fid, l}))].push_back(work[f].points[i]);
    }
  }

  // Features, shape class and box per global cluster.
  rep.global_cluster_planarity.assign(members.size(), 0.0);
  struct Fitted {
    bool keep = false;
    clustering::ShapeClass shape = clustering::ShapeClass::kVolumetric;
    OrientedBox box;
  };
  std::vector<Fitted> fitted(members.size());
  parallel_for(members.size(), config.threads, [&](std::size_t g) {
    const auto& pts = members[g];
    if (pts.size() < std::max<std::size_t>(config.min_cluster_points, 3)) return;
    const auto feat = clustering::compute_features(pts, config.features);
    rep.global_cluster_planarity[g] = feat.mean_planarity;
    auto& out = fitted[g];
    out.keep = true;
    out.shape = clustering::classify_cluster(feat.mean_planarity, config.planarity_threshold);
    if (out.shape == clustering::ShapeClass::kPlanar) {
      // Quantiles over area rather than raw returns, whose density decays with range.
      const auto thinned = config.features.downsample_voxel > 0.0
                               ? clustering::voxel_downsample(pts, config.features.downsample_voxel)
                               : pts;
      out.box = fit_planar_box(thinned.size() >= 3 ? thinned : pts, config.trim_quantile);
    } else {
      out.box = fit_min_volume_box(pts);
    }
  });
  for (std::size_t g = 0; g < fitted.size(); ++g) {
    if (!fitted[g].keep) {
      ++rep.dropped_small_clusters;
      continue;
    }
    MapBox mb{static_cast<clustering::ClusterId>(g), fitted[g].box};
    (fitted[g].shape == clustering::ShapeClass::kPlanar ? map.planar_boxes : map.volumetric_boxes)
        .push_back(mb);
  }

  if (config.build_occupancy) {
    occupancy::OccupancyGrid grid(config.occupancy);
    for (std::size_t f = 0; f < nf; ++f) {
      grid.integrate_scan(frames.frames[f].pose.translation, global[f]);
    }
    map.occupancy = std::move(grid);
  }

  map.config_hash = config.hash();
  map.frame_count = nf;
  if (report) *report = std::move(rep);
  return map;
}

// ---------------------------------------------------------------------------
// priormap v1 text container
// ---------------------------------------------------------------------------

inline constexpr std::string_view kPriorMapVersion = "v1";

inline std::string format_prior_map(const PriorMap& map) {
  using text::format_double;
  std::string out = "priormap v1\n";
  out += "frames " + std::to_string(map.frame_count) + "\n";
  out += "config_hash " + text::hex64(map.config_hash) + "\n";
  out += "planes " + std::to_string(map.ground_planes.size()) + "\n";
  for (const auto& p : map.ground_planes) {
    out += "plane " + format_double(p.normal.x()) + ' ' + format_double(p.normal.y()) + ' ' +
           format_double(p.normal.z()) + ' ' + format_double(p.offset) + ' ' +
           format_double(p.inlier_threshold) + "\n";
  }
  auto boxes = [&](std::string_view name, const std::vector<MapBox>& list) {
    out += std::string(name) + ' ' + std::to_string(list.size()) + "\n";
    for (const auto& mb : list) {
      const auto& b = mb.box;
      out += "box " + std::to_string(mb.source_id);
      for (double v : {b.center.x(), b.center.y(), b.center.z(), b.yaw, b.half_extents.x(),
                       b.half_extents.y(), b.half_extents.z(), b.margin}) {
        out += ' ' + format_double(v);
      }
      out += "\n";
    }
  };
  boxes("planar_boxes", map.planar_boxes);
  boxes("volumetric_boxes", map.volumetric_boxes);
  if (map.occupancy) {
    out += "occupancy " + std::to_string(map.occupancy->size()) + "\n";
    out += occupancy::format_voxgrid(*map.occupancy);
  } else {
    out += "occupancy none\n";
  }
  out += "end\n";
  return out;
}

inline PriorMap parse_prior_map(std::string_view content) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < content.size();) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  std::size_t cur = 0;
  auto next = [&](std::string_view expect) {
    if (cur >= lines.size()) {
      throw ParseError("priormap: unexpected end of file (expected " + std::string(expect) + ")");
    }
    return text::split_ws(lines[cur++]);
  };
  auto keyword = [&](std::string_view kw) {
    auto t = next(kw);
    if (t.size() != 2 || t[0] != kw) {
      throw ParseError("priormap line " + std::to_string(cur) + ": expected '" +
                       std::string(kw) + " <value>'");
    }
    return t[1];
  };
  auto count = [&](std::string_view kw) {
    const auto v = text::parse_int(keyword(kw), kw);
    if (v < 0) throw ParseError("priormap: negative count for " + std::string(kw));
    return static_cast<std::size_t>(v);
  };

  auto head = next("header");
  if (head.size() != 2 || head[0] != "priormap") throw ParseError("priormap: missing header");
  if (head[1] != kPriorMapVersion) {
    throw VersionError("priormap: found version '" + std::string(head[1]) +
                       "', supported version 'v1'");
  }
  PriorMap map;
  map.frame_count = count("frames");
  {
    const auto h = keyword("config_hash");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(h.data(), h.data() + h.size(), v, 16);
    if (ec != std::errc() || ptr != h.data() + h.size()) {
      throw ParseError("priormap: malformed config_hash");
    }
    map.config_hash = v;
  }
  const std::size_t n_planes = count("planes");
  for (std::size_t i = 0; i < n_planes; ++i) {
    auto t = next("plane");
    if (t.size() != 6 || t[0] != "plane") throw ParseError("priormap: malformed plane line");
    ground::PlaneModel p;
    p.normal = {text::parse_double(t[1], "plane nx"), text::parse_double(t[2], "plane ny"),
                text::parse_double(t[3], "plane nz")};
    p.offset = text::parse_double(t[4], "plane offset");
    p.inlier_threshold = text::parse_double(t[5], "plane threshold");
    map.ground_planes.push_back(p);
  }
  auto read_boxes = [&](std::string_view kw, std::vector<MapBox>& list) {
    const std::size_t n = count(kw);
    for (std::size_t i = 0; i < n; ++i) {
      auto t = next("box");
      if (t.size() != 10 || t[0] != "box") throw ParseError("priormap: malformed box line");
      MapBox mb;
      mb.source_id = static_cast<clustering::ClusterId>(text::parse_int(t[1], "box id"));
      double v[8];
      for (int k = 0; k < 8; ++k) v[k] = text::parse_double(t[2 + k], "box field");
      mb.box.center = {v[0], v[1], v[2]};
      mb.box.yaw = v[3];
      mb.box.half_extents = {v[4], v[5], v[6]};
      mb.box.margin = v[7];
      list.push_back(mb);
    }
  };
  read_boxes("planar_boxes", map.planar_boxes);
  read_boxes("volumetric_boxes", map.volumetric_boxes);
  const auto occ = keyword("occupancy");
  if (occ != "none") {
    const auto n_cells = static_cast<std::size_t>(text::parse_int(occ, "occupancy cells"));
    if (cur + 1 + n_cells > lines.size()) throw ParseError("priormap: truncated occupancy grid");
    const auto header = lines[cur++];
    std::vector<std::string_view> cells(lines.begin() + static_cast<std::ptrdiff_t>(cur),
                                        lines.begin() + static_cast<std::ptrdiff_t>(cur + n_cells));
    cur += n_cells;
    map.occupancy = occupancy::parse_voxgrid(header, cells);
  }
  auto tail = next("end");
  if (tail.size() != 1 || tail[0] != "end") throw ParseError("priormap: missing 'end' marker");
  map.validate();
  return map;
}

inline void save_prior_map(const PriorMap& map, const std::string& path) {
  text::write_file(path, format_prior_map(map));
}

inline PriorMap load_prior_map(const std::string& path) {
  try {
    return parse_prior_map(text::read_file(path));
  } catch (const VersionError& e) {
    throw VersionError(path + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace lidarprior

#endif  // LIDARPRIOR_PRIORMAP_HPP
