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


#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "lidarprior/cli.hpp"

namespace {

using namespace lidarprior;

void add_overrides(CLI::App* cmd, cli::Overrides& o, bool mapping) {
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--threads", o.threads, "Worker threads");
  cmd->add_option("--margin-ground", o.margin_ground, "Ground plane margin (m)");
  cmd->add_option("--eps", o.eps, "DBSCAN radius (m)");
  cmd->add_option("--min-pts", o.min_pts, "DBSCAN core point count");
  if (mapping) {
    cmd->add_option("--planarity-threshold", o.planarity_threshold,
                    "Planarity above which a cluster is planar");
  } else {
    cmd->add_option("--margin-box", o.margin_box, "Box margin (m)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prior-map background subtraction for LiDAR sequences"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lidarprior 1.0.0");

  cli::MapOptions map_o;
  auto* map = app.add_subcommand("map", "Build a prior map from a mapping run");
  map->add_option("manifest", map_o.manifest, "Manifest listing poses and clouds")->required();
  map->add_option("-o,--out", map_o.out, "Output prior map file")->required();
  map->add_option("-c,--config", map_o.config, "Config file");
  map->add_option("--mode", map_o.mode, "Ground extraction: ransac or histogram");
  add_overrides(map, map_o.overrides, true);

  cli::DetectOptions det_o;
  std::string cost = "analytic";
  auto* det = app.add_subcommand("detect", "Subtract the prior map and label foreground");
  det->add_option("map", det_o.map, "Prior map file")->required();
  det->add_option("manifest", det_o.manifest, "Manifest of the drive")->required();
  det->add_option("-o,--out", det_o.out_dir, "Output directory")->required();
  det->add_option("-c,--config", det_o.config, "Config file");
  det->add_option("--calibrate", det_o.calibration_frames,
                  "Reorder stages using the first N frames");
  det->add_option("--cost", cost, "Stage cost model: analytic or measured")
      ->check(CLI::IsMember({"analytic", "measured"}));
  det->add_flag("--timings", det_o.timings, "Append per-frame seconds to stats.tsv");
  add_overrides(det, det_o.overrides, false);

  cli::EvalOptions eval_o;
  auto* eval = app.add_subcommand("eval", "Score detections against ground truth");
  eval->add_option("detections", eval_o.detections, "Output directory of detect")->required();
  eval->add_option("truth", eval_o.truth, "Directory with labels_*.txt and boxes_*.txt")
      ->required();
  eval->add_option("--iou", eval_o.iou, "Box IoU threshold");
  eval->add_option("-o,--out", eval_o.out, "Also write the table to this file");

  cli::SimgenOptions sim_o;
  auto* sim = app.add_subcommand("simgen", "Generate a synthetic labelled sequence");
  sim->add_option("-s,--spec", sim_o.spec, "Scene file (default scene when omitted)");
  sim->add_option("-o,--out", sim_o.out_dir, "Output directory")->required();
  sim->add_option("--mode", sim_o.mode, "map or drive");
  sim->add_option("--seed", sim_o.seed, "Override the scene seed");
  sim->add_option("--frames", sim_o.frames, "Override the frame count");
  sim->add_option("--threads", sim_o.threads, "Worker threads");

  cli::HistogramOptions hist_o;
  auto* hist = app.add_subcommand("histogram", "Compute a v-disparity histogram for one scan");
  hist->add_option("cloud", hist_o.cloud, "Scan in sensor frame (.bin or .ply)")->required();
  hist->add_option("-o,--out", hist_o.out, "Output vdisp file")->required();
  hist->add_option("--labels", hist_o.labels_out, "Write a PLY with road labels");
  hist->add_option("-c,--config", hist_o.config, "Config file");

  cli::PlotOptions plot_o;
  auto* plot = app.add_subcommand("plot", "Render a histogram to SVG or color a labelled PLY");
  plot->add_option("input", plot_o.input, "vdisp file or ASCII PLY")->required();
  plot->add_option("-o,--out", plot_o.out, "Output file")->required();
  plot->add_option("--property", plot_o.label_property, "PLY label property");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitInput;
  }

  return cli::run_guarded([&] {
    if (*map) {
      cli::cmd_map(map_o);
    } else if (*det) {
      det_o.measured_cost = cost == "measured";
      cli::cmd_detect(det_o);
    } else if (*eval) {
      cli::cmd_eval(eval_o);
    } else if (*sim) {
      cli::cmd_simgen(sim_o);
    } else if (*hist) {
      cli::cmd_histogram(hist_o);
    } else if (*plot) {
      cli::cmd_plot(plot_o);
    }
  });
}
