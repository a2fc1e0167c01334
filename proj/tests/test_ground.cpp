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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lidarprior/error.hpp"
#include "lidarprior/ground.hpp"
#include "lidarprior/random.hpp"
#include "lidarprior/simgen.hpp"

namespace lidarprior::ground {
namespace {

double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return rad_to_deg(std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)));
}

std::vector<Point3> planted_plane(Rng& rng, std::size_t inliers, std::size_t outliers) {
  std::vector<Point3> pts;
  for (std::size_t i = 0; i < inliers; ++i) {
    pts.emplace_back(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.normal(0.0, 0.02));
  }
  for (std::size_t i = 0; i < outliers; ++i) {
    pts.emplace_back(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(2, 10));
  }
  return pts;
}

TEST(Ransac, ThreePointsGiveTheirPlane) {
  const std::vector<Point3> pts = {{0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
  const auto r = ransac_plane(pts, 0.01, 10, 1);
  EXPECT_EQ(r.inlier_count, 3u);
  EXPECT_LT(angle_deg(r.plane.normal, Eigen::Vector3d::UnitZ()), 1e-9);
  EXPECT_NEAR(r.plane.offset, -1.0, 1e-12);
}

TEST(Ransac, RecoversPlantedPlane) {
  Rng rng(41);
  const auto pts = planted_plane(rng, 1000, 100);
  const auto r = ransac_plane(pts, 0.1, 200, 7);
  EXPECT_LT(angle_deg(r.plane.normal, Eigen::Vector3d::UnitZ()), 1.0);
  EXPECT_LT(std::abs(r.plane.offset), 0.05);
  EXPECT_NEAR(r.plane.normal.norm(), 1.0, 1e-12);
  EXPECT_GE(r.plane.normal.z(), 0.0);
}

TEST(Ransac, CollinearPointsAreDegenerate) {
  std::vector<Point3> pts;
  for (int i = 0; i < 10; ++i) pts.emplace_back(i, 2.0 * i, -i);
  EXPECT_THROW(ransac_plane(pts, 0.1, 50, 3), DegenerateError);
  EXPECT_THROW(ransac_plane(std::vector<Point3>{{0, 0, 0}, {1, 0, 0}}, 0.1, 50, 3), DomainError);
}

TEST(Ransac, InvariantUnderRigidTransform) {
  Rng rng(43);
  const auto pts = planted_plane(rng, 500, 150);
  Pose pose;
  pose.translation = {5, -3, 2};
  pose.yaw = 0.8;
  pose.pitch = 0.3;
  pose.roll = -0.2;
  std::vector<Point3> moved;
  for (const auto& p : pts) moved.push_back(pose.apply(p));
  const auto a = ransac_plane(pts, 0.1, 100, 5);
  const auto b = ransac_plane(moved, 0.1, 100, 5);
  EXPECT_EQ(a.inlier_count, b.inlier_count);
  const Eigen::Vector3d rotated = pose.rotation() * a.plane.normal;
  EXPECT_LT(std::min(angle_deg(rotated, b.plane.normal), angle_deg(-rotated, b.plane.normal)),
            rad_to_deg(1e-6));
  const auto [ia, oa] = partition_indices(pts, a.plane, 0.1);
  const auto [ib, ob] = partition_indices(moved, b.plane, 0.1);
  EXPECT_EQ(ia, ib);
}

TEST(Partition, MarginExamples) {
  PlaneModel z0;
  PointCloud c;
  c.points = {{0, 0, 0.1}, {0, 0, 0.3}, {0, 0, -0.1}};
  const auto [in, out] = partition_by_plane(c, z0, 0.2);
  EXPECT_EQ(in.size(), 2u);
  EXPECT_EQ(out.size(), 1u);
  const auto [e1, e2] = partition_by_plane(PointCloud{}, z0, 0.2);
  EXPECT_TRUE(e1.empty());
  EXPECT_TRUE(e2.empty());
}

std::vector<double> layers() { return simgen::uniform_layers(32, -25.0, 5.0); }
constexpr double kStep = 0.2 * std::numbers::pi / 180.0;

TEST(DepthImage, SinglePointLandsInCentreColumn) {
  PointCloud c;
  const auto l = layers();
  c.points = {spherical_to_cartesian({10.0, 0.0, l[0]})};
  const auto img = build_depth_image(c, l, kStep);
  EXPECT_EQ(img.range[img.cell(0, img.cols / 2)], 10.0);
  std::size_t populated = 0;
  for (std::size_t i = 0; i < img.range.size(); ++i) populated += img.populated(i);
  EXPECT_EQ(populated, 1u);
}

TEST(DepthImage, NearestReturnWins) {
  PointCloud c;
  const auto l = layers();
  c.points = {spherical_to_cartesian({10.0, 0.0, l[3]}), spherical_to_cartesian({8.0, 0.0, l[3]})};
  const auto img = build_depth_image(c, l, kStep);
  EXPECT_EQ(img.range[img.cell(3, img.cols / 2)], 8.0);
  EXPECT_EQ(img.point_cell[0], img.point_cell[1]);
}

TEST(DepthImage, EmptyCloud) {
  const auto img = build_depth_image(PointCloud{}, layers(), kStep);
  for (double r : img.range) EXPECT_EQ(r, kNoReturn);
  const auto h = compute_vdisparity(img, 160, 0.5);
  EXPECT_EQ(h.total(), 0u);
}

TEST(Disparity, Examples) {
  EXPECT_DOUBLE_EQ(cell_disparity(10, 0, 0, DisparityAxis::kSensorForward), 0.1);
  EXPECT_NEAR(cell_disparity(20, deg_to_rad(10), 0, DisparityAxis::kSensorForward), 0.050772,
              1e-6);
  EXPECT_NEAR(cell_disparity(20, deg_to_rad(10), 0, DisparityAxis::kColumnForward), 0.050772,
              1e-6);
  EXPECT_TRUE(std::isnan(cell_disparity(10, 0, std::numbers::pi, DisparityAxis::kSensorForward)));
  EXPECT_DOUBLE_EQ(cell_disparity(10, 0, std::numbers::pi, DisparityAxis::kColumnForward), 0.1);
}

TEST(Histogram, BinEdgesIncrease) {
  VDisparityHistogram h;
  h.bins = 10;
  h.delta_max = 0.5;
  const auto e = h.bin_edges();
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_GT(e[i], e[i - 1]);
}

VDisparityHistogram synthetic_line_hist(std::size_t rows) {
  VDisparityHistogram h;
  h.rows = rows;
  h.bins = 100;
  h.delta_max = 0.5;
  h.counts.assign(h.rows * h.bins, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double d = 0.01 * static_cast<double>(r) + 0.0225;  // bin centres
    h.counts[r * h.bins + static_cast<std::size_t>(d / h.bin_width())] = 20;
  }
  return h;
}

TEST(RoadLine, RecoversPlantedLine) {
  const auto h = synthetic_line_hist(20);
  const auto line = fit_road_line(h, 1);
  EXPECT_NEAR(line.slope, 0.01, 1e-9);
  EXPECT_NEAR(line.intercept, 0.0225, 1e-9);
  EXPECT_GT(line.tolerance, 0.0);
}

TEST(RoadLine, SingleRowIsDegenerate) {
  EXPECT_THROW(fit_road_line(synthetic_line_hist(1), 1), DegenerateError);
}

TEST(Classify, LabelsRelativeToLine) {
  DepthImage img;
  img.layer_angles = {0.0};
  img.azimuth_bin_width = kStep;
  img.cols = 3;
  // Column 1 looks straight ahead.
  img.range = {kNoReturn, 10.0, kNoReturn};
  RoadLine line{0.0, 0.1, 0.01};
  EXPECT_EQ(classify_road(img, line)[1], RoadLabel::kRoad);
  line.intercept = 0.1 - 2 * line.tolerance;
  EXPECT_EQ(classify_road(img, line)[1], RoadLabel::kPositiveObstacle);
  line.intercept = 0.1 + 2 * line.tolerance;
  EXPECT_EQ(classify_road(img, line)[1], RoadLabel::kNegativeObstacle);
  EXPECT_EQ(classify_road(img, line)[0], RoadLabel::kNoReturn);
}

// Narrow field of view: the curvature of tan(-phi) across the layers stays
// well inside the tolerance band.
std::vector<double> flat_layers() { return simgen::uniform_layers(32, -15.0, 5.0); }

simgen::SceneSpec flat_road_scene(bool with_box) {
  simgen::SceneSpec s;
  s.frames = 1;
  s.sensor.layer_angles = flat_layers();
  s.ego.start = {0, 0, 2};
  if (with_box) {
    simgen::CuboidSpec box;
    box.name = "box";
    box.center = {6.5, 1.0};
    box.size = {1.0, 1.0, 1.0};
    s.clutter.push_back(box);
  }
  return s;
}

LidarHistogramParams hist_params() {
  LidarHistogramParams p;
  p.layer_angles = flat_layers();
  return p;
}

TEST(Segment, FlatRoadLineMatchesAnalyticDisparity) {
  const auto scan = simgen::simulate_scan(flat_road_scene(false), 0);
  const auto seg = segment_road(scan.cloud, hist_params());
  const auto l = flat_layers();
  for (std::size_t r = 0; r < l.size(); ++r) {
    std::uint64_t row_total = 0;
    for (std::size_t b = 0; b < seg.histogram.bins; ++b) row_total += seg.histogram.at(r, b);
    if (row_total == 0) continue;
    const double analytic = std::tan(-l[r]) / 2.0;
    EXPECT_NEAR(seg.line.at(static_cast<double>(r)), analytic, 1.5 * seg.histogram.bin_width())
        << "row " << r;
  }
}

TEST(Segment, RoadRecallAndBoxExclusion) {
  const auto scan = simgen::simulate_scan(flat_road_scene(true), 0);
  const auto seg = segment_road(scan.cloud, hist_params());
  std::size_t road = 0, road_hit = 0, box = 0, box_as_road = 0;
  for (std::size_t i = 0; i < scan.labels.size(); ++i) {
    if (scan.labels[i] == simgen::TruthLabel::kRoad) {
      ++road;
      road_hit += seg.point_labels[i] == RoadLabel::kRoad;
    } else {
      ++box;
      box_as_road += seg.point_labels[i] == RoadLabel::kRoad;
    }
  }
  ASSERT_GT(box, 50u);
  EXPECT_GE(static_cast<double>(road_hit) / static_cast<double>(road), 0.99);
  EXPECT_EQ(box_as_road, 0u);
}

TEST(Segment, PartitionIsExhaustiveOverPopulatedCells) {
  const auto scan = simgen::simulate_scan(flat_road_scene(true), 0);
  const auto seg = segment_road(scan.cloud, hist_params());
  std::uint64_t populated = 0;
  for (std::size_t c = 0; c < seg.image.range.size(); ++c) {
    if (!seg.image.populated(c)) {
      EXPECT_EQ(seg.cell_labels[c], RoadLabel::kNoReturn);
      continue;
    }
    ++populated;
    EXPECT_NE(seg.cell_labels[c], RoadLabel::kNoReturn);
  }
  EXPECT_LE(seg.histogram.total(), populated);
}

}  // namespace
}  // namespace lidarprior::ground
