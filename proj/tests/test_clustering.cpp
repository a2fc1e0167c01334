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
#include <map>
#include <numeric>

#include "lidarprior/clustering.hpp"
#include "lidarprior/error.hpp"
#include "lidarprior/random.hpp"
#include "clustering_oracle.hpp"

namespace lidarprior::clustering {
namespace {

TEST(Dbscan, TwoSeparatedBlobs) {
  std::vector<Point3> pts;
  for (int i = 0; i < 50; ++i) pts.emplace_back(0.1 * (i % 10), 0.1 * (i / 10), 0);
  for (int i = 0; i < 50; ++i) pts.emplace_back(10 + 0.1 * (i % 10), 0.1 * (i / 10), 0);
  const auto res = dbscan_full(pts, 0.5, 3);
  EXPECT_EQ(res.n_clusters, 2);
  EXPECT_EQ(std::count(res.labels.begin(), res.labels.end(), kNoise), 0);
  EXPECT_TRUE(testing::matches_oracle(pts, 0.5, 3, res.labels));
}

TEST(Dbscan, IsolatedPointIsNoise) {
  const std::vector<Point3> pts = {{0, 0, 0}};
  EXPECT_EQ(dbscan(pts, 0.5, 2)[0], kNoise);
  EXPECT_TRUE(dbscan(std::vector<Point3>{}, 0.5, 2).empty());
}

TEST(Dbscan, MinPtsMutualNeighboursFormOneCluster) {
  const std::vector<Point3> pts = {{0, 0, 0}, {0.1, 0, 0}, {0, 0.1, 0}, {0.1, 0.1, 0}};
  const auto res = dbscan_full(pts, 0.5, 4);
  EXPECT_EQ(res.n_clusters, 1);
  for (auto l : res.labels) EXPECT_EQ(l, 0);
}

TEST(Dbscan, RandomInstancesMatchOracle) {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(500);
    const double eps = rng.uniform(0.2, 1.5);
    const std::size_t min_pts = 1 + rng.index(8);
    std::vector<Point3> pts;
    // A few Gaussian blobs plus uniform background, so all three point kinds occur.
    const std::size_t blobs = 1 + rng.index(5);
    std::vector<Point3> centres;
    for (std::size_t b = 0; b < blobs; ++b) {
      centres.emplace_back(rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(0, 3));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < 0.2) {
        pts.emplace_back(rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(0, 3));
      } else {
        const auto& c = centres[rng.index(blobs)];
        pts.emplace_back(rng.normal(c.x(), 1.0), rng.normal(c.y(), 1.0), rng.normal(c.z(), 0.5));
      }
    }
    const auto res = dbscan_full(pts, eps, min_pts);
    ASSERT_TRUE(testing::matches_oracle(pts, eps, min_pts, res.labels)) << "trial " << trial;
    // Ids are dense.
    std::vector<bool> seen(static_cast<std::size_t>(res.n_clusters), false);
    for (auto l : res.labels) {
      if (l != kNoise) seen[static_cast<std::size_t>(l)] = true;
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }));
  }
}

TEST(Dbscan, CoreSetInvariantUnderPermutation) {
  Rng rng(103);
  auto pts = std::vector<Point3>();
  for (int i = 0; i < 300; ++i) pts.emplace_back(rng.uniform(0, 8), rng.uniform(0, 8), 0);
  const auto a = dbscan_full(pts, 0.6, 4);
  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  std::vector<Point3> shuffled;
  for (auto i : perm) shuffled.push_back(pts[i]);
  const auto b = dbscan_full(shuffled, 0.6, 4);
  for (std::size_t k = 0; k < perm.size(); ++k) EXPECT_EQ(b.core[k], a.core[perm[k]]);
}

TEST(SuperCluster, MergesDriftingObservations) {
  std::vector<FrameCluster> fc = {
      {0, 0, {10, 0, 0}}, {1, 3, {10.05, 0, 0}}, {2, 1, {10.1, 0, 0}}};
  auto ids = super_cluster(fc, 0.5, 1);
  EXPECT_EQ(ids.at({0, 0}), ids.at({1, 3}));
  EXPECT_EQ(ids.at({0, 0}), ids.at({2, 1}));

  fc = {{0, 0, {0, 0, 0}}, {0, 1, {5, 0, 0}}};
  ids = super_cluster(fc, 0.5, 1);
  EXPECT_NE(ids.at({0, 0}), ids.at({0, 1}));
  EXPECT_TRUE(super_cluster({}, 0.5, 1).empty());
}

TEST(SuperCluster, NoiseCentroidsGetOwnIds) {
  std::vector<FrameCluster> fc = {{0, 0, {0, 0, 0}}, {1, 0, {0.1, 0, 0}}, {2, 0, {9, 0, 0}}};
  const auto ids = super_cluster(fc, 0.5, 2);
  EXPECT_EQ(ids.at({0, 0}), 0);
  EXPECT_EQ(ids.at({1, 0}), 0);
  EXPECT_EQ(ids.at({2, 0}), 1);
}

TEST(StructureTensor, PlanarPointsHaveZeroSmallestEigenvalue) {
  Rng rng(107);
  std::vector<Point3> pts;
  for (int i = 0; i < 500; ++i) pts.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3), 0);
  const auto ev = structure_tensor(pts);
  EXPECT_GE(ev(0), ev(1));
  EXPECT_GE(ev(1), ev(2));
  EXPECT_NEAR(ev(2), 0.0, 1e-10);
  EXPECT_THROW(structure_tensor(std::vector<Point3>{{0, 0, 0}, {1, 1, 1}}), DomainError);
}

TEST(StructureTensor, IsotropicGaussian) {
  Rng rng(109);
  std::vector<Point3> pts;
  for (int i = 0; i < 10000; ++i) pts.emplace_back(rng.normal(), rng.normal(), rng.normal());
  const auto ev = structure_tensor(pts);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(ev(k), 1.0, 0.1);
}

TEST(StructureTensor, InvariantUnderRigidTransform) {
  Rng rng(113);
  std::vector<Point3> pts, moved;
  Pose pose;
  pose.translation = {100, -50, 3};
  pose.yaw = 1.1;
  pose.pitch = -0.4;
  pose.roll = 0.25;
  for (int i = 0; i < 400; ++i) {
    pts.emplace_back(rng.normal(0, 3), rng.normal(0, 1), rng.normal(0, 0.3));
    moved.push_back(pose.apply(pts.back()));
  }
  EXPECT_LT((structure_tensor(pts) - structure_tensor(moved)).norm(), 1e-9);
}

TEST(Planarity, Examples) {
  EXPECT_EQ(planarity(1, 1, 0), 1.0);
  EXPECT_EQ(planarity(1, 1, 1), 0.0);
  EXPECT_EQ(planarity(4, 3, 1), 0.5);
  EXPECT_THROW(planarity(0, 0, 0), DegenerateError);
}

TEST(Planarity, ScaleInvariant) {
  Rng rng(127);
  for (int i = 0; i < 100; ++i) {
    double v[3] = {rng.uniform(0.01, 5), rng.uniform(0, 5), rng.uniform(0, 5)};
    std::sort(v, v + 3, std::greater<>());
    const double c = rng.uniform(0.01, 100);
    EXPECT_NEAR(planarity(v[0], v[1], v[2]), planarity(c * v[0], c * v[1], c * v[2]), 1e-12);
  }
}

TEST(Classify, ThresholdIsInclusive) {
  EXPECT_EQ(classify_cluster(0.9, 0.6), ShapeClass::kPlanar);
  EXPECT_EQ(classify_cluster(0.2, 0.6), ShapeClass::kVolumetric);
  EXPECT_EQ(classify_cluster(0.6, 0.6), ShapeClass::kPlanar);
}

TEST(Features, WallIsPlanarAndBlobIsNot) {
  Rng rng(131);
  std::vector<Point3> wall, blob;
  for (int i = 0; i < 2000; ++i) {
    wall.emplace_back(rng.uniform(0, 10), rng.normal(0, 0.02), rng.uniform(0, 5));
  }
  for (int i = 0; i < 2000; ++i) {
    blob.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  }
  const auto fw = compute_features(wall);
  const auto fb = compute_features(blob);
  EXPECT_EQ(classify_cluster(fw.mean_planarity, 0.6), ShapeClass::kPlanar);
  EXPECT_EQ(classify_cluster(fb.mean_planarity, 0.6), ShapeClass::kVolumetric);
  EXPECT_GT(fw.mean_planarity, fb.mean_planarity + 0.2);

  FeatureOptions tensor;
  tensor.mode = PlanarityMode::kClusterTensor;
  EXPECT_LT(compute_features(blob, tensor).mean_planarity, 0.2);
}

TEST(ClusterPoints, FeaturesForEveryCluster) {
  Rng rng(137);
  std::vector<Point3> pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back(rng.uniform(0, 2), rng.uniform(0, 2), 0);
  for (int i = 0; i < 200; ++i) pts.emplace_back(rng.uniform(10, 12), rng.uniform(0, 2), 0);
  const auto set = cluster_points(pts, 0.5, 4, 0.6);
  EXPECT_EQ(set.size(), 2u);
  EXPECT_EQ(set.shapes.size(), 2u);
  const auto m = set.members();
  EXPECT_EQ(m[0].size() + m[1].size(), 400u);
}

}  // namespace
}  // namespace lidarprior::clustering
