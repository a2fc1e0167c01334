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

// Subcommand implementations behind the `lidarprior` binary. Each cmd_*
// function throws; run_guarded() turns exceptions into exit codes.

#ifndef LIDARPRIOR_CLI_HPP
#define LIDARPRIOR_CLI_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lidarprior/cascade.hpp"
#include "lidarprior/core.hpp"
#include "lidarprior/error.hpp"
#include "lidarprior/ground.hpp"
#include "lidarprior/io.hpp"
#include "lidarprior/parallel.hpp"
#include "lidarprior/plot.hpp"
#include "lidarprior/priormap.hpp"
#include "lidarprior/simgen.hpp"
#include "lidarprior/text.hpp"

namespace lidarprior::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitPipeline = 3;

inline int run_guarded(const std::function<void()>& fn, std::ostream& err = std::cerr) {
  try {
    fn();
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const PipelineError& e) {
    err << "pipeline error: " << e.what() << '\n';
    return kExitPipeline;
  } catch (const std::exception& e) {
    err << "pipeline error: " << e.what() << '\n';
    return kExitPipeline;
  }
}

// ---------------------------------------------------------------------------
// Shared configuration
// ---------------------------------------------------------------------------

inline constexpr std::string_view kConfigVersion = "v1";

/// Everything a config file can set. The global section accepts `version`
/// (must be v1), `seed` and `threads`; [mapping], [occupancy] and [cascade]
/// sections feed the respective parameter structs.
struct RunConfig {
  MappingConfig mapping;
  cascade::CascadeParams cascade;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

inline RunConfig parse_run_config(const text::ConfigFile& cfg) {
  RunConfig rc;
  for (const auto& sec : cfg.sections) {
    if (sec.kind.empty()) {
      for (const auto& [key, value] : sec.entries) {
        if (key == "version") {
          if (value != kConfigVersion) {
            throw VersionError("config: found version '" + value + "', supported version 'v1'");
          }
        } else if (key == "seed") {
          const auto v = text::parse_int(value, "seed");
          if (v < 0) throw InputError("config: seed must be non-negative");
          rc.seed = static_cast<std::uint64_t>(v);
        } else if (key == "threads") {
          const auto v = text::parse_int(value, "threads");
          if (v < 1) throw InputError("config: threads must be >= 1");
          rc.threads = static_cast<std::size_t>(v);
        } else {
          throw InputError("config: unknown key '" + key + "'");
        }
      }
    } else if (sec.kind != "mapping" && sec.kind != "occupancy" && sec.kind != "cascade") {
      throw InputError("config: unknown section [" + sec.kind + "] at line " +
                       std::to_string(sec.line));
    }
  }
  rc.mapping.apply(cfg);
  rc.cascade.apply(cfg);
  rc.mapping.seed = rc.seed;
  rc.mapping.threads = rc.threads;
  return rc;
}

inline RunConfig load_run_config(const std::optional<std::string>& path) {
  if (!path) return {};
  try {
    return parse_run_config(text::ConfigFile::load(*path));
  } catch (const VersionError& e) {
    throw VersionError(*path + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(*path + ": " + e.what());
  }
}

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<double> margin_ground;
  std::optional<double> margin_box;
  std::optional<double> eps;
  std::optional<std::size_t> min_pts;
  std::optional<double> planarity_threshold;
};

inline void apply_overrides(RunConfig& rc, const Overrides& o) {
  if (o.seed) rc.seed = rc.mapping.seed = *o.seed;
  if (o.threads) {
    if (*o.threads < 1) throw InputError("--threads must be >= 1");
    rc.threads = rc.mapping.threads = *o.threads;
  }
  if (o.margin_ground) {
    rc.cascade.margin_ground = *o.margin_ground;
    rc.mapping.ground_margin = *o.margin_ground;
  }
  if (o.margin_box) rc.cascade.margin_box = *o.margin_box;
  if (o.eps) rc.mapping.eps = rc.cascade.eps = *o.eps;
  if (o.min_pts) rc.mapping.min_pts = rc.cascade.min_pts = *o.min_pts;
  if (o.planarity_threshold) rc.mapping.planarity_threshold = *o.planarity_threshold;
  rc.mapping.validate();
  rc.cascade.validate();
}

inline std::string frame_name(std::string_view prefix, std::size_t index, std::string_view ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return std::string(prefix) + "_" + buf + std::string(ext);
}

inline std::filesystem::path prepare_out_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw InputError("cannot create output directory '" + dir + "'" +
                     (ec ? ": " + ec.message() : std::string()));
  }
  const auto probe = fs::path(dir) / ".lidarprior_write_probe";
  text::write_file(probe.string(), "");
  fs::remove(probe, ec);
  return fs::path(dir);
}

/// Sorted files in `dir` named `<prefix>_NNNNNN<ext>`, keyed by NNNNNN.
inline std::vector<std::pair<std::size_t, std::string>> list_frames(const std::string& dir,
                                                                    std::string_view prefix,
                                                                    std::string_view ext) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InputError("not a directory: '" + dir + "'");
  std::vector<std::pair<std::size_t, std::string>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::string head = std::string(prefix) + "_";
    if (!name.starts_with(head) || !name.ends_with(ext)) continue;
    const auto digits = std::string_view(name).substr(head.size(), name.size() - head.size() -
                                                                        ext.size());
    if (digits.empty() ||
        !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      continue;
    }
    out.emplace_back(static_cast<std::size_t>(text::parse_int(digits, name)),
                     entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// map
// ---------------------------------------------------------------------------

struct MapOptions {
  std::string manifest;
  std::string out;
  std::optional<std::string> config;
  std::optional<std::string> mode;  // ransac | histogram
  Overrides overrides;
};

inline void cmd_map(const MapOptions& o, std::ostream& log = std::cerr) {
  auto rc = load_run_config(o.config);
  if (o.mode) {
    if (*o.mode == "ransac") rc.mapping.ground_mode = GroundMode::kRansac;
    else if (*o.mode == "histogram") rc.mapping.ground_mode = GroundMode::kLidarHistogram;
    else throw InputError("--mode for map must be ransac or histogram");
  }
  apply_overrides(rc, o.overrides);
  const auto frames = io::load_frames(io::load_manifest(o.manifest));
  MappingReport rep;
  const auto map = build_prior_map(frames, rc.mapping, &rep);
  save_prior_map(map, o.out);
  log << "map: " << frames.size() << " frames, " << map.planar_boxes.size() << " planar, "
      << map.volumetric_boxes.size() << " volumetric boxes -> " << o.out << '\n';
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

struct DetectOptions {
  std::string map;
  std::string manifest;
  std::string out_dir;
  std::optional<std::string> config;
  std::size_t calibration_frames = 0;  // 0 keeps the default stage order
  bool measured_cost = false;
  bool timings = false;
  Overrides overrides;
};

inline std::string format_stats_header() {
  return "frame\tpoints\trejected_ground\trejected_planar\trejected_volumetric\tsurvivors\t"
         "out_of_range\tclusters\tdynamic\tnsso\tunknown\tvacated";
}

inline void cmd_detect(const DetectOptions& o, std::ostream& log = std::cerr) {
  auto rc = load_run_config(o.config);
  apply_overrides(rc, o.overrides);
  const auto map = load_prior_map(o.map);
  const auto frames = io::load_frames(io::load_manifest(o.manifest));
  const auto out = prepare_out_dir(o.out_dir);

  auto cascade = cascade::default_cascade(map, rc.cascade);
  if (o.calibration_frames > 0) {
    std::vector<Point3> calib;
    for (std::size_t k = 0; k < std::min(o.calibration_frames, frames.size()); ++k) {
      const auto g = transform_to_global(frames.frames[k].cloud, frames.frames[k].pose);
      calib.insert(calib.end(), g.points.begin(), g.points.end());
    }
    cascade = cascade::order_stages(cascade::calibrate_stages(
        cascade.stages, map, calib,
        o.measured_cost ? cascade::CostModel::kMeasured : cascade::CostModel::kAnalytic));
  }

  cascade::Detector det(map, cascade, rc.cascade);
  const std::size_t n = frames.size();
  std::vector<cascade::ForegroundResult> results(n);
  std::vector<double> seconds(n, 0.0);
  parallel_for(n, rc.threads, [&](std::size_t k) {
    const auto t0 = std::chrono::steady_clock::now();
    results[k] = cascade::run_cascade(frames.frames[k].cloud, frames.frames[k].pose, map,
                                      det.cascade(), rc.cascade);
    seconds[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  std::string stats = format_stats_header() + (o.timings ? "\tseconds\n" : "\n");
  std::string stages = "frame";
  for (const auto& s : det.cascade().stages) {
    stages += '\t';
    stages += std::string(cascade::stage_kind_name(s.kind)) + ":" + std::to_string(s.model_id);
  }
  stages += '\n';

  for (std::size_t k = 0; k < n; ++k) {
    auto& res = results[k];
    det.observe(res, frames.frames[k].pose);
    const auto& cloud = frames.frames[k].cloud;

    auto table = io::ply_from_cloud(cloud);
    std::vector<double> stage_col(res.input_size), label_col(res.input_size),
        track_col(res.input_size, -1.0);
    const auto labels = res.point_labels();
    for (std::size_t i = 0; i < res.input_size; ++i) {
      stage_col[i] = res.point_stage[i];
      label_col[i] = static_cast<int>(labels[i]);
    }
    std::vector<simgen::LabeledBox> boxes;
    for (const auto& c : res.clusters) {
      for (auto i : c.indices) track_col[i] = static_cast<double>(c.track_id);
      boxes.push_back({c.track_id, std::string(cascade::cluster_label_name(c.label)), c.box,
                       c.indices.size()});
    }
    table.add_column("int", "stage_rejected", std::move(stage_col));
    table.add_column("int", "fg_label", std::move(label_col));
    table.add_column("int", "track_id", std::move(track_col));
    table.comments.push_back("fg_label 0 background 1 unclustered 2 unknown 3 nsso 4 dynamic");
    text::write_file((out / frame_name("frame", k, ".ply")).string(), io::format_ply_ascii(table));
    text::write_file((out / frame_name("boxes", k, ".txt")).string(), simgen::format_boxes(boxes));

    std::size_t by_kind[3] = {0, 0, 0};
    for (std::size_t s = 0; s < res.stage_rejected.size(); ++s) {
      by_kind[static_cast<int>(det.cascade().stages[s].kind)] += res.stage_rejected[s];
    }
    std::string vacated;
    for (const auto& v : det.vacated()) {
      if (!vacated.empty()) vacated += ',';
      vacated += std::to_string(v.source_id);
    }
    if (vacated.empty()) vacated = "-";
    stats += std::to_string(k) + '\t' + std::to_string(res.input_size) + '\t' +
             std::to_string(by_kind[0]) + '\t' + std::to_string(by_kind[1]) + '\t' +
             std::to_string(by_kind[2]) + '\t' + std::to_string(res.survivors.size()) + '\t' +
             std::to_string(res.out_of_range) + '\t' + std::to_string(res.clusters.size()) +
             '\t' + std::to_string(res.count(cascade::ClusterLabel::kDynamic)) + '\t' +
             std::to_string(res.count(cascade::ClusterLabel::kNsso)) + '\t' +
             std::to_string(res.count(cascade::ClusterLabel::kUnknown)) + '\t' + vacated;
    if (o.timings) stats += '\t' + text::format_fixed(seconds[k], 6);
    stats += '\n';
    stages += std::to_string(k);
    for (auto c : res.stage_rejected) stages += '\t' + std::to_string(c);
    stages += '\n';
  }
  text::write_file((out / "stats.tsv").string(), stats);
  text::write_file((out / "stages.tsv").string(), stages);
  log << "detect: " << n << " frames -> " << out.string() << '\n';
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
  std::string detections;
  std::string truth;
  double iou = 0.5;
  std::optional<std::string> out;
};

inline std::string metric_text(double v) {
  return std::isnan(v) ? std::string("nan") : text::format_fixed(v, 6);
}

/// Tab-separated table: one row per frame plus TOTAL. A detection directory
/// without any frame files scores as "nothing detected".
inline std::string evaluate_dirs(const EvalOptions& o) {
  if (!(o.iou > 0.0 && o.iou <= 1.0)) throw InputError("--iou must be in (0, 1]");
  const auto truth = list_frames(o.truth, "labels", ".txt");
  if (truth.empty()) throw InputError("no labels_NNNNNN.txt files in '" + o.truth + "'");
  const auto dets = list_frames(o.detections, "frame", ".ply");
  if (!dets.empty()) {
    if (dets.size() != truth.size()) {
      throw InputError("frame count mismatch: " + std::to_string(dets.size()) +
                       " detection frames vs " + std::to_string(truth.size()) + " truth frames");
    }
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (dets[i].first != truth[i].first) {
        throw InputError("frame index mismatch at position " + std::to_string(i));
      }
    }
  }
  namespace fs = std::filesystem;
  auto read_boxes = [](const fs::path& p) {
    if (!fs::exists(p)) return std::vector<simgen::LabeledBox>{};
    return simgen::parse_boxes(text::read_file(p.string()));
  };

  std::string out =
      "frame\tpoints\ttp\tfp\tfn\tprecision\trecall\tf1\tpred_boxes\ttruth_boxes\tdetected\t"
      "box_precision\tbox_recall\tmean_iou\n";
  simgen::PointMetrics ptot;
  simgen::BoxMetrics btot;
  std::size_t npoints = 0;
  auto row = [&](const std::string& name, std::size_t points, const simgen::PointMetrics& pm,
                 const simgen::BoxMetrics& bm) {
    out += name + '\t' + std::to_string(points) + '\t' + std::to_string(pm.tp) + '\t' +
           std::to_string(pm.fp) + '\t' + std::to_string(pm.fn) + '\t' +
           metric_text(pm.precision()) + '\t' + metric_text(pm.recall()) + '\t' +
           metric_text(pm.f1()) + '\t' + std::to_string(bm.n_predicted) + '\t' +
           std::to_string(bm.n_truth) + '\t' + std::to_string(bm.detected) + '\t' +
           metric_text(bm.precision()) + '\t' + metric_text(bm.recall()) + '\t' +
           metric_text(bm.mean_iou()) + '\n';
  };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::size_t idx = truth[i].first;
    const auto labels = simgen::parse_labels(text::read_file(truth[i].second));
    std::vector<std::uint32_t> predicted;
    std::vector<OrientedBox> pred_boxes, truth_boxes;
    if (!dets.empty()) {
      const auto table = io::parse_ply_ascii(text::read_file(dets[i].second));
      const auto& fg = table.column("fg_label");
      if (fg.size() != labels.size()) {
        throw InputError("frame " + std::to_string(idx) + ": " + std::to_string(fg.size()) +
                         " detected points vs " + std::to_string(labels.size()) + " labels");
      }
      for (std::uint32_t p = 0; p < fg.size(); ++p) {
        if (fg[p] >= static_cast<double>(cascade::PointLabel::kUnknown)) predicted.push_back(p);
      }
      for (const auto& b :
           read_boxes(fs::path(o.detections) / frame_name("boxes", idx, ".txt"))) {
        pred_boxes.push_back(b.box);
      }
    }
    for (const auto& b : read_boxes(fs::path(o.truth) / frame_name("boxes", idx, ".txt"))) {
      if (b.points > 0) truth_boxes.push_back(b.box);
    }
    const auto pm = simgen::point_metrics(predicted, labels);
    auto bm = simgen::box_metrics(pred_boxes, truth_boxes, o.iou);
    row(std::to_string(idx), labels.size(), pm, bm);
    ptot += pm;
    btot += bm;
    npoints += labels.size();
  }
  row("TOTAL", npoints, ptot, btot);
  return out;
}

inline void cmd_eval(const EvalOptions& o, std::ostream& stdout_stream = std::cout) {
  const auto table = evaluate_dirs(o);
  if (o.out) text::write_file(*o.out, table);
  stdout_stream << table;
}

// ---------------------------------------------------------------------------
// simgen
// ---------------------------------------------------------------------------

struct SimgenOptions {
  std::optional<std::string> spec;  // default scene when absent
  std::string out_dir;
  std::string mode = "drive";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> frames;
  std::size_t threads = 1;
};

inline void cmd_simgen(const SimgenOptions& o, std::ostream& log = std::cerr) {
  simgen::SceneSpec spec = o.spec ? simgen::load_scene(*o.spec) : simgen::default_scene();
  if (o.seed) spec.seed = *o.seed;
  if (o.frames) spec.frames = *o.frames;
  spec.validate();
  simgen::SimMode mode;
  if (o.mode == "map") mode = simgen::SimMode::kMap;
  else if (o.mode == "drive") mode = simgen::SimMode::kDrive;
  else throw InputError("--mode for simgen must be map or drive");
  if (o.threads < 1) throw InputError("--threads must be >= 1");

  const auto out = prepare_out_dir(o.out_dir);
  const auto seq = simgen::generate_sequence(spec, mode, o.threads);
  std::vector<io::StampedPose> poses;
  std::vector<std::string> clouds;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& f = seq.frames.frames[k];
    const std::string cloud_name = frame_name("frame", k, ".bin");
    io::save_cloud(f.cloud, (out / cloud_name).string(), io::CloudFormat::kKittiBin);
    clouds.push_back(cloud_name);
    poses.push_back({f.cloud.timestamp, f.pose});
    const auto& t = seq.truth.frames[k];
    text::write_file((out / frame_name("labels", k, ".txt")).string(),
                     simgen::format_labels(t.labels));
    text::write_file((out / frame_name("boxes", k, ".txt")).string(),
                     simgen::format_boxes(t.boxes));
  }
  text::write_file((out / "poses.txt").string(), io::format_pose_track(poses));
  text::write_file((out / "manifest.txt").string(), io::format_manifest("poses.txt", clouds));
  text::write_file((out / "scene.txt").string(), simgen::format_scene(spec));
  log << "simgen: " << seq.frames.size() << " " << o.mode << " frames -> " << out.string()
      << '\n';
}

// ---------------------------------------------------------------------------
// histogram and plot
// ---------------------------------------------------------------------------

struct HistogramOptions {
  std::string cloud;
  std::string out;  // vdisp file
  std::optional<std::string> labels_out;  // PLY with road labels
  std::optional<std::string> config;
};

inline void cmd_histogram(const HistogramOptions& o, std::ostream& log = std::cerr) {
  const auto rc = load_run_config(o.config);
  rc.mapping.validate();
  const auto cloud = io::load_cloud(o.cloud);
  const auto seg = ground::segment_road(cloud, rc.mapping.histogram_params());
  text::write_file(o.out, plot::format_vdisp({seg.histogram, seg.line}));
  if (o.labels_out) {
    auto table = io::ply_from_cloud(cloud);
    std::vector<double> lab(seg.point_labels.size());
    for (std::size_t i = 0; i < lab.size(); ++i) lab[i] = static_cast<int>(seg.point_labels[i]);
    table.add_column("int", "label", std::move(lab));
    table.comments.push_back("label 0 no_return 1 road 2 positive_obstacle 3 negative_obstacle");
    text::write_file(*o.labels_out, io::format_ply_ascii(table));
  }
  log << "histogram: " << seg.histogram.rows << "x" << seg.histogram.bins << " -> " << o.out
      << '\n';
}

struct PlotOptions {
  std::string input;
  std::string out;
  std::optional<std::string> label_property;
};

/// vdisp input renders to SVG; labeled PLY input gets per-label colors.
inline void cmd_plot(const PlotOptions& o, std::ostream& log = std::cerr) {
  const std::string content = text::read_file(o.input);
  const std::string head = content.substr(0, content.find('\n'));
  const auto first = text::split_ws(head);
  if (!first.empty() && first[0] == "vdisp") {
    text::write_file(o.out, plot::render_vdisp_svg(plot::parse_vdisp(content)));
    log << "plot: histogram -> " << o.out << '\n';
    return;
  }
  if (!first.empty() && first[0] == "ply") {
    const auto table = io::parse_ply_ascii(content);
    const auto prop = o.label_property ? o.label_property : plot::find_label_property(table);
    if (!prop) throw InputError("plot: PLY input has no label property");
    text::write_file(o.out, io::format_ply_ascii(plot::colorize_labels(table, *prop)));
    log << "plot: colored " << table.rows() << " points by '" << *prop << "' -> " << o.out
        << '\n';
    return;
  }
  throw InputError("plot: unknown input kind (expected a vdisp histogram or an ASCII PLY)");
}

}  // namespace lidarprior::cli

#endif  // LIDARPRIOR_CLI_HPP
