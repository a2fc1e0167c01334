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
#include <limits>
#include <set>

#include "lidarprior/error.hpp"
#include "lidarprior/occupancy.hpp"
#include "lidarprior/random.hpp"

namespace lidarprior::occupancy {
namespace {

OccupancyParams unclamped() {
  OccupancyParams p;
  p.l_min = -std::numeric_limits<double>::infinity();
  p.l_max = std::numeric_limits<double>::infinity();
  return p;
}

// Recursive binary Bayes filter in probability space:
// p_t = [1 + (1-p_z)/p_z * (1-p_{t-1})/p_{t-1} * p0/(1-p0)]^-1
double product_form(double p0, const std::vector<double>& pz) {
  double p = p0;
  for (double z : pz) {
    p = 1.0 / (1.0 + (1.0 - z) / z * (1.0 - p) / p * p0 / (1.0 - p0));
  }
  return p;
}

TEST(LogOdds, Examples) {
  EXPECT_EQ(log_odds(0.5), 0.0);
  EXPECT_NEAR(log_odds(0.7), 0.847298, 1e-6);
  EXPECT_NEAR(probability(log_odds(0.3)), 0.3, 1e-12);
  EXPECT_THROW(log_odds(0.0), DomainError);
  EXPECT_THROW(log_odds(1.0), DomainError);
}

TEST(Traverse, SameVoxel) {
  OccupancyParams p;
  p.voxel_size = 1.0;
  const auto cells = traverse_cells({0.2, 0.2, 0.2}, {0.8, 0.7, 0.1}, p);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0], (GridIndex{0, 0, 0}));
}

TEST(Traverse, AxisAlignedWalk) {
  OccupancyParams p;
  p.voxel_size = 1.0;
  const auto cells = traverse_cells({0.5, 0.5, 0.5}, {3.5, 0.5, 0.5}, p);
  const std::vector<GridIndex> expect = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  EXPECT_EQ(cells, expect);
}

// Dense sampling of the segment; voxels only grazed at an edge or corner
// are invisible to it, like they are to the walk.
std::set<GridIndex> sampled_cells(const Point3& a, const Point3& b, const OccupancyParams& p,
                                  int samples = 10000) {
  std::set<GridIndex> out;
  for (int s = 0; s <= samples; ++s) {
    const double t = static_cast<double>(s) / samples;
    out.insert(index_of(a + t * (b - a), p));
  }
  return out;
}

TEST(Traverse, DiagonalThroughEdgeMatchesSampling) {
  OccupancyParams p;
  p.voxel_size = 1.0;
  const Point3 a(0.5, 0.5, 0.5), b(1.5, 1.5, 0.5);
  const auto cells = traverse_cells(a, b, p);
  const std::set<GridIndex> got(cells.begin(), cells.end());
  EXPECT_EQ(got, sampled_cells(a, b, p));
  EXPECT_EQ(cells.size(), 2u);
}

TEST(Traverse, RandomSegmentsAreConnectedAndMatchSampling) {
  Rng rng(17);
  OccupancyParams p;
  p.voxel_size = 0.5;
  for (int trial = 0; trial < 200; ++trial) {
    const Point3 a(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Point3 b(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const auto cells = traverse_cells(a, b, p);
    ASSERT_EQ(cells.front(), index_of(a, p));
    ASSERT_EQ(cells.back(), index_of(b, p));
    const std::set<GridIndex> uniq(cells.begin(), cells.end());
    ASSERT_EQ(uniq.size(), cells.size()) << "duplicate cell";
    for (std::size_t i = 1; i < cells.size(); ++i) {
      int changed = 0;
      for (int ax = 0; ax < 3; ++ax) {
        const auto d = cells[i][ax] - cells[i - 1][ax];
        ASSERT_LE(std::abs(d), 1);
        changed += d != 0;
      }
      ASSERT_GE(changed, 1);
    }
    // Sampling can step over a voxel the segment only clips for a few
    // micrometres, so it may see slightly fewer cells, never different ones.
    const auto sampled = sampled_cells(a, b, p, 200000);
    for (const auto& c : sampled) ASSERT_TRUE(uniq.count(c)) << "trial " << trial;
    EXPECT_LE(uniq.size() - sampled.size(), 2u) << "trial " << trial;
  }
}

TEST(Grid, SingleOccupiedUpdateGivesPOccupied) {
  OccupancyGrid g(OccupancyParams{});
  g.update_occupied({0, 0, 0});
  EXPECT_DOUBLE_EQ(g.probability_at({0, 0, 0}), 0.7);
}

TEST(Grid, TwoOccupiedUpdates) {
  OccupancyGrid g(OccupancyParams{});
  g.update_occupied({0, 0, 0});
  g.update_occupied({0, 0, 0});
  // [1 + (0.3/0.7)^2]^-1 = 49/58
  EXPECT_NEAR(g.probability_at({0, 0, 0}), 49.0 / 58.0, 1e-12);
  EXPECT_NEAR(g.probability_at({0, 0, 0}), 0.8448, 1e-4);
}

TEST(Grid, ClampingSaturates) {
  OccupancyGrid g(OccupancyParams{});
  for (int i = 0; i < 100; ++i) g.update_occupied({1, 2, 3});
  EXPECT_EQ(g.log_odds_at({1, 2, 3}), 3.5);
  for (int i = 0; i < 100; ++i) g.update_free({1, 2, 3});
  EXPECT_EQ(g.log_odds_at({1, 2, 3}), -2.0);
}

TEST(Grid, CellStates) {
  OccupancyGrid g(OccupancyParams{});
  EXPECT_EQ(occupancy_state(g, {0, 0, 0}, 0.85, -0.85), CellState::kUnknown);
  g.set_log_odds({1, 0, 0}, 3.5);
  g.set_log_odds({2, 0, 0}, -2.0);
  EXPECT_EQ(occupancy_state(g, {1, 0, 0}, 0.85, -0.85), CellState::kOccupied);
  EXPECT_EQ(occupancy_state(g, {2, 0, 0}, 0.85, -0.85), CellState::kFree);
  EXPECT_THROW(occupancy_state(g, {0, 0, 0}, -1.0, 1.0), DomainError);
}

TEST(Grid, ProductFormMatchesLogOddsSum) {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    auto params = unclamped();
    params.p_prior = rng.uniform(0.45, 0.55);
    params.p_free = rng.uniform(0.1, 0.44);
    params.p_occupied = rng.uniform(0.56, 0.95);
    OccupancyGrid g(params);
    std::vector<double> pz;
    const auto len = rng.index(21);
    for (std::uint64_t k = 0; k < len; ++k) {
      if (rng.uniform() < 0.5) {
        g.update_occupied({0, 0, 0});
        pz.push_back(params.p_occupied);
      } else {
        g.update_free({0, 0, 0});
        pz.push_back(params.p_free);
      }
    }
    ASSERT_NEAR(g.probability_at({0, 0, 0}), product_form(params.p_prior, pz), 1e-9);
  }
}

TEST(Grid, UpdateOrderDoesNotMatter) {
  Rng rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> seq;
    for (int k = 0; k < 15; ++k) seq.push_back(rng.uniform() < 0.5);
    OccupancyGrid a(unclamped()), b(unclamped());
    for (int s : seq) s ? a.update_occupied({0, 0, 0}) : a.update_free({0, 0, 0});
    std::reverse(seq.begin(), seq.end());
    std::rotate(seq.begin(), seq.begin() + 4, seq.end());
    for (int s : seq) s ? b.update_occupied({0, 0, 0}) : b.update_free({0, 0, 0});
    EXPECT_NEAR(a.log_odds_at({0, 0, 0}), b.log_odds_at({0, 0, 0}), 1e-12);
  }
}

TEST(Grid, UpdatesAreMonotone) {
  OccupancyGrid g(OccupancyParams{});
  double last = g.log_odds_at({0, 0, 0});
  for (int i = 0; i < 30; ++i) {
    g.update_occupied({0, 0, 0});
    EXPECT_GE(g.log_odds_at({0, 0, 0}), last);
    last = g.log_odds_at({0, 0, 0});
  }
  for (int i = 0; i < 30; ++i) {
    g.update_free({0, 0, 0});
    EXPECT_LE(g.log_odds_at({0, 0, 0}), last);
    last = g.log_odds_at({0, 0, 0});
  }
}

TEST(Grid, ScanMarksTraversedFreeAndEndpointOccupied) {
  OccupancyParams p;
  p.voxel_size = 1.0;
  OccupancyGrid g(p);
  PointCloud c;
  c.points = {{3.5, 0.5, 0.5}, {std::numeric_limits<double>::quiet_NaN(), 0, 0}};
  const auto st = g.integrate_scan({0.5, 0.5, 0.5}, c);
  EXPECT_EQ(st.skipped_nonfinite, 1u);
  EXPECT_EQ(st.occupied_cells, 1u);
  EXPECT_EQ(st.free_cells, 3u);
  EXPECT_GT(g.log_odds_at({3, 0, 0}), 0.0);
  for (int i = 0; i < 3; ++i) EXPECT_LT(g.log_odds_at({i, 0, 0}), 0.0);
  EXPECT_EQ(g.log_odds_at({5, 5, 5}), 0.0);
}

TEST(Grid, HitWinsOverPassWithinOneScan) {
  OccupancyParams p;
  p.voxel_size = 1.0;
  OccupancyGrid g(p);
  PointCloud c;
  c.points = {{2.5, 0.5, 0.5}, {4.5, 0.5, 0.5}};
  g.integrate_scan({0.5, 0.5, 0.5}, c);
  EXPECT_NEAR(g.log_odds_at({2, 0, 0}), p.occupied_increment(), 1e-12);
}

TEST(Grid, VoxgridRoundTrip) {
  OccupancyGrid g(OccupancyParams{});
  g.update_occupied({1, -2, 3});
  g.update_free({0, 0, 0});
  g.update_free({-5, 4, 2});
  EXPECT_EQ(parse_voxgrid(format_voxgrid(g)), g);
}

TEST(Params, Validation) {
  OccupancyParams p;
  p.p_free = 0.6;
  EXPECT_THROW(OccupancyGrid{p}, InputError);
  p = {};
  p.voxel_size = 0.0;
  EXPECT_THROW(OccupancyGrid{p}, InputError);
}

}  // namespace
}  // namespace lidarprior::occupancy
