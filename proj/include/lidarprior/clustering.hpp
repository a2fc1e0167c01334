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

#ifndef LIDARPRIOR_CLUSTERING_HPP
#define LIDARPRIOR_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <tuple>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lidarprior/core.hpp"
#include "lidarprior/error.hpp"
#include "lidarprior/kdtree.hpp"

namespace lidarprior::clustering {

using ClusterId = std::int32_t;
inline constexpr ClusterId kNoise = -1;

struct DbscanResult {
  std::vector<ClusterId> labels;  // kNoise or an id in [0, n_clusters)
  std::vector<bool> core;
  std::int32_t n_clusters = 0;
};

/**
 * Classic DBSCAN. A point is core when at least `min_pts` points (itself
 * included) lie within `eps`. Clusters are grown breadth-first from the
 * lowest-index unvisited core point, so ids are dense and deterministic.
 */
inline DbscanResult dbscan_full(std::span<const Point3> points, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw DomainError("dbscan: eps must be positive");
  if (min_pts < 1) throw DomainError("dbscan: min_pts must be >= 1");
  constexpr ClusterId kUnvisited = -2;
  DbscanResult res;
  res.labels.assign(points.size(), kUnvisited);
  res.core.assign(points.size(), false);
  if (points.empty()) return res;

  KdTree tree(points);
  std::vector<std::uint32_t> nbrs;
  std::vector<std::uint32_t> frontier;
  std::vector<bool> queued(points.size(), false);
  auto enqueue = [&](ClusterId id) {
    for (auto k : nbrs) {
      if (res.labels[k] == kNoise) {
        res.labels[k] = id;  // border point, first cluster to reach it keeps it
      } else if (res.labels[k] == kUnvisited && !queued[k]) {
        queued[k] = true;
        frontier.push_back(k);
      }
    }
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (res.labels[i] != kUnvisited) continue;
    tree.radius_search(points[i], eps, nbrs);
    if (nbrs.size() < min_pts) {
      res.labels[i] = kNoise;
      continue;
    }
    const ClusterId id = res.n_clusters++;
    res.labels[i] = id;
    res.core[i] = true;
    frontier.clear();
    enqueue(id);
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const std::uint32_t j = frontier[head];
      res.labels[j] = id;
      tree.radius_search(points[j], eps, nbrs);
      if (nbrs.size() >= min_pts) {
        res.core[j] = true;
        enqueue(id);
      }
    }
  }
  return res;
}

inline std::vector<ClusterId> dbscan(std::span<const Point3> points, double eps,
                                     std::size_t min_pts) {
  return dbscan_full(points, eps, min_pts).labels;
}

/**
 * Density-adapted neighbourhood radius: the larger of `base_eps` and
 * `factor` times the median distance to the k-th nearest neighbour.
 */
inline double adaptive_eps(std::span<const Point3> points, double base_eps, std::size_t k = 4,
                           double factor = 2.0) {
  if (points.size() <= k) return base_eps;
  KdTree tree(points);
  std::vector<double> dk;
  dk.reserve(points.size());
  for (const auto& p : points) {
    auto nn = tree.knn(p, k + 1);
    dk.push_back(std::sqrt(nn.back().first));
  }
  auto mid = dk.begin() + static_cast<std::ptrdiff_t>(dk.size() / 2);
  std::nth_element(dk.begin(), mid, dk.end());
  return std::max(base_eps, factor * *mid);
}

// ---------------------------------------------------------------------------
// Super-clustering: DBSCAN over per-frame cluster centroids.
// ---------------------------------------------------------------------------

struct FrameCluster {
  std::uint64_t frame_id = 0;
  ClusterId cluster_id = 0;
  Point3 centroid = Point3::Zero();
};

using GlobalIdMap = std::map<std::pair<std::uint64_t, ClusterId>, ClusterId>;

/// Centroids left as noise get their own global id, numbered after the
/// clustered ids in input order.
inline GlobalIdMap super_cluster(std::span<const FrameCluster> frame_clusters, double eps2,
                                 std::size_t min_pts2) {
  GlobalIdMap out;
  if (frame_clusters.empty()) return out;
  std::vector<Point3> centroids;
  centroids.reserve(frame_clusters.size());
  for (const auto& fc : frame_clusters) centroids.push_back(fc.centroid);
  const DbscanResult res = dbscan_full(centroids, eps2, min_pts2);
  ClusterId next = res.n_clusters;
  for (std::size_t i = 0; i < frame_clusters.size(); ++i) {
    const ClusterId gid = res.labels[i] == kNoise ? next++ : res.labels[i];
    out[{frame_clusters[i].frame_id, frame_clusters[i].cluster_id}] = gid;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shape features
// ---------------------------------------------------------------------------

/// Eigenvalues (descending, clamped at 0) of the covariance of `points`.
inline Eigen::Vector3d structure_tensor(std::span<const Point3> points) {
  if (points.size() < 3) {
    throw DomainError("structure_tensor: need at least 3 points, got " +
                      std::to_string(points.size()));
  }
  Point3 mean = Point3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Point3 d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d ev = es.eigenvalues();  // ascending
  return {std::max(ev(2), 0.0), std::max(ev(1), 0.0), std::max(ev(0), 0.0)};
}

/// (l2 - l3) / l1 for sorted eigenvalues l1 >= l2 >= l3 >= 0.
inline double planarity(double l1, double l2, double l3) {
  if (!(l1 >= l2 && l2 >= l3 && l3 >= 0.0)) {
    throw DomainError("planarity: eigenvalues must satisfy l1 >= l2 >= l3 >= 0");
  }
  if (!(l1 > 0.0)) throw DegenerateError("planarity: l1 = 0 (degenerate cluster)");
  return std::clamp((l2 - l3) / l1, 0.0, 1.0);
}

inline double planarity(const Eigen::Vector3d& ev) { return planarity(ev(0), ev(1), ev(2)); }

enum class ShapeClass : std::uint8_t { kPlanar, kVolumetric };

/// Planar iff planarity >= threshold.
inline ShapeClass classify_cluster(double planarity_value, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw DomainError("classify_cluster: threshold must lie in (0, 1)");
  }
  return planarity_value >= threshold ? ShapeClass::kPlanar : ShapeClass::kVolumetric;
}

enum class PlanarityMode : std::uint8_t {
  kMeanPerPoint,   // mean of per-point planarity over k-NN neighbourhoods
  kClusterTensor,  // one tensor over the whole cluster
};

struct FeatureOptions {
  PlanarityMode mode = PlanarityMode::kMeanPerPoint;
  std::size_t k_neighbors = 15;
  // Voxel grid for thinning before per-point features; 0 disables. Evens out
  // scan-line anisotropy, which otherwise makes neighbourhoods linear.
  double downsample_voxel = 0.25;
};

struct ClusterFeatures {
  Point3 centroid = Point3::Zero();
  std::size_t point_count = 0;
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();
  double planarity = 0.0;        // from the cluster-level tensor
  double mean_planarity = 0.0;   // value used for classification
};

/// One centroid per occupied voxel, in voxel-key order.
inline std::vector<Point3> voxel_downsample(std::span<const Point3> points, double voxel) {
  if (!(voxel > 0.0)) return {points.begin(), points.end()};
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::pair<Point3, std::size_t>>
      acc;
  for (const auto& p : points) {
    auto key = std::make_tuple(static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                               static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                               static_cast<std::int64_t>(std::floor(p.z() / voxel)));
    auto& [sum, n] = acc[key];
    if (n == 0) sum = Point3::Zero();
    sum += p;
    ++n;
  }
  std::vector<Point3> out;
  out.reserve(acc.size());
  for (const auto& [key, v] : acc) out.push_back(v.first / static_cast<double>(v.second));
  return out;
}

inline double mean_point_planarity(std::span<const Point3> points, std::size_t k) {
  if (points.size() < 3) return 0.0;
  KdTree tree(points);
  const std::size_t kk = std::min(std::max<std::size_t>(k, 3), points.size());
  std::vector<Point3> nb;
  nb.reserve(kk);
  double sum = 0.0;
  for (const auto& p : points) {
    nb.clear();
    for (const auto& [d2, idx] : tree.knn(p, kk)) nb.push_back(points[idx]);
    const Eigen::Vector3d ev = structure_tensor(nb);
    sum += ev(0) > 0.0 ? planarity(ev) : 0.0;
  }
  return sum / static_cast<double>(points.size());
}

inline ClusterFeatures compute_features(std::span<const Point3> points,
                                        const FeatureOptions& opts = {}) {
  if (points.empty()) throw DomainError("compute_features: empty cluster");
  ClusterFeatures f;
  f.point_count = points.size();
  for (const auto& p : points) f.centroid += p;
  f.centroid /= static_cast<double>(points.size());
  if (points.size() >= 3) {
    f.eigenvalues = structure_tensor(points);
    f.planarity = f.eigenvalues(0) > 0.0 ? planarity(f.eigenvalues) : 0.0;
  }
  if (opts.mode == PlanarityMode::kClusterTensor) {
    f.mean_planarity = f.planarity;
  } else {
    const auto thinned = voxel_downsample(points, opts.downsample_voxel);
    f.mean_planarity = mean_point_planarity(thinned, opts.k_neighbors);
  }
  return f;
}

struct ClusterSet {
  std::vector<ClusterId> labels;  // aligned to the clustered points
  std::vector<ClusterFeatures> features;
  std::vector<ShapeClass> shapes;

  std::size_t size() const { return features.size(); }

  std::vector<std::vector<std::uint32_t>> members() const {
    std::vector<std::vector<std::uint32_t>> m(features.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != kNoise) m[static_cast<std::size_t>(labels[i])].push_back(
          static_cast<std::uint32_t>(i));
    }
    return m;
  }
};

/// Groups labelled points into per-cluster index lists.
inline std::vector<std::vector<std::uint32_t>> group_by_label(std::span<const ClusterId> labels,
                                                              std::size_t n_clusters) {
  std::vector<std::vector<std::uint32_t>> m(n_clusters);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kNoise) m[static_cast<std::size_t>(labels[i])].push_back(
        static_cast<std::uint32_t>(i));
  }
  return m;
}

/// DBSCAN followed by per-cluster features and shape class.
inline ClusterSet cluster_points(std::span<const Point3> points, double eps, std::size_t min_pts,
                                 double planarity_threshold, const FeatureOptions& opts = {}) {
  ClusterSet set;
  const DbscanResult res = dbscan_full(points, eps, min_pts);
  set.labels = res.labels;
  const auto groups = group_by_label(set.labels, static_cast<std::size_t>(res.n_clusters));
  std::vector<Point3> buf;
  for (const auto& g : groups) {
    buf.clear();
    for (auto i : g) buf.push_back(points[i]);
    set.features.push_back(compute_features(buf, opts));
    set.shapes.push_back(classify_cluster(set.features.back().mean_planarity, planarity_threshold));
  }
  return set;
}

}  // namespace lidarprior::clustering

#endif  // LIDARPRIOR_CLUSTERING_HPP
