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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lidarprior/error.hpp"
#include "lidarprior/priormap.hpp"
#include "lidarprior/simgen.hpp"
#include "test_support.hpp"

namespace lidarprior {
namespace {

simgen::SceneSpec small_scene(bool with_objects) {
  simgen::SceneSpec s;
  s.frames = 10;
  s.sensor.layer_angles = simgen::uniform_layers(32, -25.0, 5.0);
  s.sensor.max_range = 60.0;
  if (with_objects) {
    s.facades.push_back({"wall", {-10.0, 9.0}, {35.0, 9.0}, -1.0, 6.0});
    simgen::CuboidSpec kiosk;
    kiosk.name = "kiosk";
    kiosk.center = {12.0, -5.0};
    kiosk.size = {2.0, 2.0, 2.5};
    simgen::CuboidSpec bench;
    bench.name = "bench";
    bench.center = {20.0, 5.0};
    bench.size = {3.0, 1.5, 1.2};
    bench.yaw = deg_to_rad(20.0);
    s.clutter = {kiosk, bench};
  }
  return s;
}

FrameSequence map_frames(const simgen::SceneSpec& s) {
  return simgen::generate_sequence(s, simgen::SimMode::kMap).frames;
}

TEST(BuildPriorMap, FacadeAndTwoClutterBoxes) {
  const auto spec = small_scene(true);
  const auto seq = simgen::generate_sequence(spec, simgen::SimMode::kMap);
  const MappingConfig cfg;
  const auto map = build_prior_map(seq.frames, cfg);
  ASSERT_EQ(map.ground_planes.size(), 1u);
  const double tilt =
      rad_to_deg(std::acos(std::min(1.0, map.ground_planes[0].normal.dot(Point3::UnitZ()))));
  EXPECT_LT(tilt, 1.0);
  EXPECT_NEAR(map.ground_planes[0].offset, 0.0, 0.05);
  ASSERT_EQ(map.planar_boxes.size(), 1u);
  ASSERT_EQ(map.volumetric_boxes.size(), 2u);
  EXPECT_NEAR(map.planar_boxes[0].box.center.y(), 9.0, 0.2);
  EXPECT_NO_THROW(map.validate());

  // Boxes only see the faces scanned from the road, so each one is checked
  // for sitting on its object and for covering the object's returns.
  const auto snap = simgen::snapshot(spec, 0, simgen::SimMode::kMap);
  for (const auto& c : snap.cuboids) {
    std::size_t hits = 0;
    for (const auto& b : map.volumetric_boxes) {
      const Point3 base_level(b.box.center.x(), b.box.center.y(), c.box.center.z());
      hits += c.box.contains(base_level);
    }
    EXPECT_EQ(hits, 1u) << c.name;

    std::size_t above = 0, covered = 0;
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      const auto g = transform_to_global(seq.frames.frames[k].cloud, seq.frames.frames[k].pose);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (seq.truth.frames[k].owners[i] != c.owner || g.points[i].z() <= cfg.ground_margin) {
          continue;
        }
        ++above;
        for (const auto& b : map.volumetric_boxes) {
          if (b.box.contains(g.points[i])) {
            ++covered;
            break;
          }
        }
      }
    }
    ASSERT_GT(above, 0u) << c.name;
    EXPECT_GE(static_cast<double>(covered) / static_cast<double>(above), 0.9) << c.name;
  }
}

TEST(BuildPriorMap, RoadOnlyHasNoBoxes) {
  const auto map = build_prior_map(map_frames(small_scene(false)), MappingConfig{});
  EXPECT_EQ(map.ground_planes.size(), 1u);
  EXPECT_TRUE(map.planar_boxes.empty());
  EXPECT_TRUE(map.volumetric_boxes.empty());
}

TEST(BuildPriorMap, HistogramGroundModeFindsTheRoad) {
  MappingConfig cfg;
  cfg.ground_mode = GroundMode::kLidarHistogram;
  const auto map = build_prior_map(map_frames(small_scene(true)), cfg);
  ASSERT_EQ(map.ground_planes.size(), 1u);
  EXPECT_GT(map.ground_planes[0].normal.z(), std::cos(deg_to_rad(1.0)));
  EXPECT_EQ(map.planar_boxes.size(), 1u);
  EXPECT_EQ(map.volumetric_boxes.size(), 2u);
}

TEST(BuildPriorMap, ZeroFramesIsAPipelineError) {
  EXPECT_THROW(build_prior_map(FrameSequence{}, MappingConfig{}), PipelineError);
}

std::vector<Point2> sorted_footprint(const OrientedBox& b) {
  const auto f = b.footprint();
  std::vector<Point2> v(f.begin(), f.end());
  std::sort(v.begin(), v.end(), [](const Point2& a, const Point2& c) {
    return std::tie(a.x(), a.y()) < std::tie(c.x(), c.y());
  });
  return v;
}

void expect_same_box(const OrientedBox& a, const OrientedBox& b) {
  const auto fa = sorted_footprint(a), fb = sorted_footprint(b);
  for (int k = 0; k < 4; ++k) EXPECT_LT((fa[k] - fb[k]).norm(), 1e-6);
  EXPECT_NEAR(a.center.z(), b.center.z(), 1e-6);
  EXPECT_NEAR(a.half_extents.z(), b.half_extents.z(), 1e-6);
}

// Boxes are gravity aligned and thinning uses a world-aligned voxel grid, so
// the transform is a quarter turn in yaw plus a whole-voxel translation.
TEST(BuildPriorMap, InvariantUnderGridPreservingRigidTransform) {
  const auto frames = map_frames(small_scene(true));
  Pose t;
  t.yaw = std::numbers::pi / 2;
  t.translation = {12.5, -7.25, 0.5};
  auto moved = frames;
  for (auto& f : moved.frames) {
    f.pose.translation = t.apply(f.pose.translation);
    f.pose.yaw += t.yaw;
  }
  const auto a = build_prior_map(frames, MappingConfig{});
  const auto b = build_prior_map(moved, MappingConfig{});
  ASSERT_EQ(a.planar_boxes.size(), b.planar_boxes.size());
  ASSERT_EQ(a.volumetric_boxes.size(), b.volumetric_boxes.size());
  ASSERT_EQ(b.ground_planes.size(), 1u);
  EXPECT_LT((t.rotation() * a.ground_planes[0].normal - b.ground_planes[0].normal).norm(), 1e-6);
  auto transformed = [&](OrientedBox box) {
    box.center = t.apply(box.center);
    box.yaw += t.yaw;
    box.canonicalize();
    return box;
  };
  for (std::size_t i = 0; i < a.planar_boxes.size(); ++i) {
    expect_same_box(transformed(a.planar_boxes[i].box), b.planar_boxes[i].box);
  }
  for (std::size_t i = 0; i < a.volumetric_boxes.size(); ++i) {
    expect_same_box(transformed(a.volumetric_boxes[i].box), b.volumetric_boxes[i].box);
  }
}

PriorMap example_map() {
  PriorMap m;
  m.frame_count = 3;
  m.config_hash = 0xabcdef0123456789ULL;
  ground::PlaneModel p;
  p.normal = Point3(0.01, -0.02, 1.0).normalized();
  p.offset = -0.125;
  p.inlier_threshold = 0.3;
  m.ground_planes.push_back(p);
  OrientedBox b;
  b.center = {1.5, -2.25, 3.0};
  b.yaw = 0.3;
  b.half_extents = {4, 0.1, 5};
  m.planar_boxes.push_back({0, b});
  b.center = {10, 11, 1};
  b.yaw = -1.2;
  b.half_extents = {1, 0.5, 0.75};
  m.volumetric_boxes.push_back({1, b});
  b.margin = 0.05;
  m.volumetric_boxes.push_back({2, b});
  return m;
}

TEST(PriorMapFormat, RoundTrip) {
  const auto m = example_map();
  EXPECT_EQ(parse_prior_map(format_prior_map(m)), m);
}

TEST(PriorMapFormat, RoundTripWithOccupancy) {
  auto m = example_map();
  occupancy::OccupancyGrid g(occupancy::OccupancyParams{});
  g.update_occupied({1, 2, 3});
  g.update_free({0, 0, 0});
  m.occupancy = g;
  EXPECT_EQ(parse_prior_map(format_prior_map(m)), m);
}

TEST(PriorMapFormat, UnknownVersionNamesBoth) {
  auto text = format_prior_map(example_map());
  text.replace(text.find("v1"), 2, "v9");
  try {
    parse_prior_map(text);
    FAIL() << "expected VersionError";
  } catch (const VersionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("v9"), std::string::npos) << msg;
    EXPECT_NE(msg.find("v1"), std::string::npos) << msg;
  }
}

TEST(PriorMapFormat, TruncatedFileIsRejected) {
  const auto text = format_prior_map(example_map());
  EXPECT_THROW(parse_prior_map(text.substr(0, text.size() / 2)), ParseError);
  EXPECT_THROW(parse_prior_map(""), ParseError);
}

TEST(PriorMapFormat, SaveAndLoadPrefixErrorsWithPath) {
  testing::TempDir dir("map");
  save_prior_map(example_map(), dir.str("a.map"));
  EXPECT_EQ(load_prior_map(dir.str("a.map")), example_map());
  text::write_file(dir.str("b.map"), "priormap v2\n");
  try {
    load_prior_map(dir.str("b.map"));
    FAIL();
  } catch (const VersionError& e) {
    EXPECT_NE(std::string(e.what()).find("b.map"), std::string::npos);
  }
}

TEST(MappingConfigFile, AppliesSectionsAndRejectsUnknownKeys) {
  MappingConfig cfg;
  cfg.apply(text::ConfigFile::parse("[mapping]\neps = 0.9\nground_mode = histogram\n"
                                    "[occupancy]\nvoxel_size = 0.25\n"));
  EXPECT_EQ(cfg.eps, 0.9);
  EXPECT_EQ(cfg.ground_mode, GroundMode::kLidarHistogram);
  EXPECT_EQ(cfg.occupancy.voxel_size, 0.25);
  EXPECT_THROW(cfg.apply(text::ConfigFile::parse("[mapping]\nbogus = 1\n")), InputError);
  MappingConfig other;
  EXPECT_NE(cfg.hash(), other.hash());
}

}  // namespace
}  // namespace lidarprior
