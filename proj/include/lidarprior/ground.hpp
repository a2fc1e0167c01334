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

#ifndef LIDARPRIOR_GROUND_HPP
#define LIDARPRIOR_GROUND_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lidarprior/core.hpp"
#include "lidarprior/error.hpp"
#include "lidarprior/random.hpp"

namespace lidarprior::ground {

// ===========================================================================
// Plane fitting
// ===========================================================================

/// Plane n . x + offset = 0 with unit normal, oriented so that normal.z >= 0.
struct PlaneModel {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
  double inlier_threshold = 0.0;

  double signed_distance(const Point3& p) const { return normal.dot(p) + offset; }

  static PlaneModel from_point_normal(const Point3& point, Eigen::Vector3d n,
                                      double inlier_threshold = 0.0) {
    n.normalize();
    PlaneModel m;
    m.normal = n;
    m.offset = -n.dot(point);
    m.inlier_threshold = inlier_threshold;
    m.canonicalize();
    return m;
  }

  void canonicalize() {
    const bool flip = normal.z() < 0.0 ||
                      (normal.z() == 0.0 && (normal.y() < 0.0 ||
                                             (normal.y() == 0.0 && normal.x() < 0.0)));
    if (flip) {
      normal = -normal;
      offset = -offset;
    }
  }

  bool operator==(const PlaneModel&) const = default;
};

/// Total least squares plane through the given points (centroid + smallest
/// principal axis). Throws DegenerateError for fewer than 3 points or a
/// collinear set.
inline PlaneModel fit_plane_least_squares(std::span<const Point3> points,
                                          std::span<const std::uint32_t> subset = {}) {
  const std::size_t n = subset.empty() ? points.size() : subset.size();
  if (n < 3) throw DegenerateError("plane fit needs at least 3 points");
  auto at = [&](std::size_t i) -> const Point3& {
    return subset.empty() ? points[i] : points[subset[i]];
  };
  Point3 centroid = Point3::Zero();
  for (std::size_t i = 0; i < n; ++i) centroid += at(i);
  centroid /= static_cast<double>(n);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Point3 d = at(i) - centroid;
    cov.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const auto& ev = es.eigenvalues();
  if (!(ev(1) > 1e-18 * std::max(1.0, ev(2)))) {
    throw DegenerateError("plane fit: points are collinear");
  }
  return PlaneModel::from_point_normal(centroid, es.eigenvectors().col(0));
}

struct RansacResult {
  PlaneModel plane;
  std::size_t inlier_count = 0;
  std::size_t degenerate_samples = 0;
};

/**
 * RANSAC plane search: score planes through random point triples by inlier
 * count (|distance| <= dist_threshold), keep the first best, refine it by
 * least squares over its inliers and recount.
 *
 * Deterministic for a fixed seed. `score_subset`, when non-empty, restricts
 * hypothesis scoring to those indices (refinement still uses all points).
 */
inline RansacResult ransac_plane(std::span<const Point3> points, double dist_threshold,
                                 std::size_t max_iterations, std::uint64_t seed,
                                 std::span<const std::uint32_t> score_subset = {}) {
  const std::size_t n = points.size();
  if (n < 3) throw DomainError("ransac_plane: need at least 3 points, got " + std::to_string(n));
  if (!(dist_threshold > 0.0)) throw DomainError("ransac_plane: threshold must be positive");

  Rng rng(seed);
  RansacResult result;
  std::size_t best_count = 0;
  bool found = false;
  Eigen::Vector3d best_normal = Eigen::Vector3d::UnitZ();
  double best_offset = 0.0;

  auto count_inliers = [&](const Eigen::Vector3d& nrm, double off) {
    std::size_t c = 0;
    if (score_subset.empty()) {
      for (const auto& p : points) c += std::abs(nrm.dot(p) + off) <= dist_threshold;
    } else {
      for (auto i : score_subset) c += std::abs(nrm.dot(points[i]) + off) <= dist_threshold;
    }
    return c;
  };

  for (std::size_t it = 0; it < std::max<std::size_t>(1, max_iterations); ++it) {
    std::size_t i0 = 0, i1 = 1, i2 = 2;
    if (n > 3) {
      i0 = rng.index(n);
      do {
        i1 = rng.index(n);
      } while (i1 == i0);
      do {
        i2 = rng.index(n);
      } while (i2 == i0 || i2 == i1);
    }
    const Point3& a = points[i0];
    const Eigen::Vector3d ab = points[i1] - a;
    const Eigen::Vector3d ac = points[i2] - a;
    Eigen::Vector3d nrm = ab.cross(ac);
    const double scale = ab.norm() * ac.norm();
    if (!(nrm.norm() > 1e-10 * scale) || scale == 0.0) {
      ++result.degenerate_samples;
      if (n == 3) break;
      continue;
    }
    nrm.normalize();
    const double off = -nrm.dot(a);
    const std::size_t c = count_inliers(nrm, off);
    if (!found || c > best_count) {
      found = true;
      best_count = c;
      best_normal = nrm;
      best_offset = off;
    }
    if (n == 3) break;
  }
  if (!found) {
    throw DegenerateError("ransac_plane: every sampled triple was collinear");
  }

  std::vector<std::uint32_t> inliers;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(best_normal.dot(points[i]) + best_offset) <= dist_threshold) {
      inliers.push_back(static_cast<std::uint32_t>(i));
    }
  }
  PlaneModel plane;
  try {
    plane = fit_plane_least_squares(points, inliers);
  } catch (const DegenerateError&) {
    plane.normal = best_normal;
    plane.offset = best_offset;
    plane.canonicalize();
  }
  plane.inlier_threshold = dist_threshold;
  std::size_t count = 0;
  for (const auto& p : points) count += std::abs(plane.signed_distance(p)) <= dist_threshold;
  result.plane = plane;
  result.inlier_count = count;
  return result;
}

/// Indices split by |n . p + offset| <= margin; both lists keep input order.
inline std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> partition_indices(
    std::span<const Point3> points, const PlaneModel& plane, double margin) {
  std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& dst = std::abs(plane.signed_distance(points[i])) <= margin ? out.first : out.second;
    dst.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

inline PointCloud select_points(const PointCloud& cloud, std::span<const std::uint32_t> idx) {
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.timestamp = cloud.timestamp;
  out.points.reserve(idx.size());
  for (auto i : idx) out.points.push_back(cloud.points[i]);
  if (cloud.intensity) {
    std::vector<float> inten;
    inten.reserve(idx.size());
    for (auto i : idx) inten.push_back((*cloud.intensity)[i]);
    out.intensity = std::move(inten);
  }
  return out;
}

/// (inliers, outliers) of the plane within `margin`.
inline std::pair<PointCloud, PointCloud> partition_by_plane(const PointCloud& cloud,
                                                            const PlaneModel& plane,
                                                            double margin) {
  auto [in, out] = partition_indices(cloud.points, plane, margin);
  return {select_points(cloud, in), select_points(cloud, out)};
}

// ===========================================================================
// Lidar-histogram road segmentation
// ===========================================================================

inline constexpr double kNoReturn = 0.0;

/**
 * Range image: one row per laser layer, one column per azimuth bin.
 * Column q is centred on theta = (q - cols/2) * azimuth_bin_width, so
 * theta = 0 (straight ahead) falls on column cols/2.
 */
struct DepthImage {
  std::vector<double> layer_angles;
  double azimuth_bin_width = 0.0;
  std::size_t cols = 0;
  std::vector<double> range;          // rows * cols, kNoReturn when empty
  std::vector<std::int64_t> source;   // point kept in each cell, -1 if none
  std::vector<std::int64_t> point_cell;  // per input point, -1 if dropped
  std::size_t dropped = 0;

  std::size_t rows() const { return layer_angles.size(); }
  std::size_t cell(std::size_t row, std::size_t col) const { return row * cols + col; }
  bool populated(std::size_t c) const { return range[c] > 0.0; }

  double column_theta(std::size_t col) const {
    return (static_cast<double>(col) - static_cast<double>(cols / 2)) * azimuth_bin_width;
  }

  std::size_t column_of(double theta) const {
    const auto half = static_cast<std::int64_t>(cols / 2);
    const auto n = static_cast<std::int64_t>(cols);
    const std::int64_t q = std::llround(theta / azimuth_bin_width) + half;
    return static_cast<std::size_t>(((q % n) + n) % n);
  }
};

/// Nearest layer row for elevation `phi`, or -1 when it lies more than half
/// a layer spacing outside the layer set.
inline std::int64_t layer_row(std::span<const double> layers, double phi) {
  const std::size_t n = layers.size();
  if (n == 0) return -1;
  if (n == 1) return 0;
  auto it = std::lower_bound(layers.begin(), layers.end(), phi);
  std::size_t hi = static_cast<std::size_t>(it - layers.begin());
  if (hi == 0) {
    return phi >= layers[0] - 0.5 * (layers[1] - layers[0]) ? 0 : -1;
  }
  if (hi == n) {
    return phi <= layers[n - 1] + 0.5 * (layers[n - 1] - layers[n - 2])
               ? static_cast<std::int64_t>(n - 1)
               : -1;
  }
  const std::size_t lo = hi - 1;
  return static_cast<std::int64_t>(phi - layers[lo] <= layers[hi] - phi ? lo : hi);
}

inline DepthImage build_depth_image(const PointCloud& cloud, std::vector<double> layer_angles,
                                    double azimuth_bin_width) {
  if (layer_angles.empty()) throw DomainError("build_depth_image: no layer angles");
  if (!std::is_sorted(layer_angles.begin(), layer_angles.end())) {
    throw DomainError("build_depth_image: layer angles must be sorted");
  }
  if (!(azimuth_bin_width > 0.0)) throw DomainError("build_depth_image: bad azimuth bin width");
  DepthImage img;
  img.layer_angles = std::move(layer_angles);
  img.azimuth_bin_width = azimuth_bin_width;
  img.cols = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / azimuth_bin_width - 1e-9));
  img.range.assign(img.rows() * img.cols, kNoReturn);
  img.source.assign(img.rows() * img.cols, -1);
  img.point_cell.assign(cloud.size(), -1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    const double d = p.norm();
    if (!is_finite(p) || !(d > 0.0)) {
      ++img.dropped;
      continue;
    }
    const SphericalPoint s = cartesian_to_spherical(p);
    const std::int64_t row = layer_row(img.layer_angles, s.phi);
    if (row < 0) {
      ++img.dropped;
      continue;
    }
    const std::size_t c = img.cell(static_cast<std::size_t>(row), img.column_of(s.theta));
    img.point_cell[i] = static_cast<std::int64_t>(c);
    if (img.range[c] == kNoReturn || s.d < img.range[c]) {
      img.range[c] = s.d;
      img.source[c] = static_cast<std::int64_t>(i);
    }
  }
  return img;
}

/**
 * Which forward axis the disparity 1/x is measured along.
 *
 * kSensorForward uses the sensor x axis, x = d cos(phi) cos(theta). A flat
 * road then has constant disparity along a layer only near theta = 0.
 * kColumnForward measures x along each column's own heading,
 * x = d cos(phi), so every road cell of a layer shares one disparity over
 * the full sweep.
 */
enum class DisparityAxis { kSensorForward, kColumnForward };

/// Disparity of a cell; NaN when the cell lies behind the reference plane.
inline double cell_disparity(double d, double phi, double theta, DisparityAxis axis) {
  const double c = axis == DisparityAxis::kSensorForward ? std::cos(phi) * std::cos(theta)
                                                         : std::cos(phi);
  if (!(c > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 / (d * c);
}

struct VDisparityHistogram {
  std::size_t rows = 0;
  std::size_t bins = 0;
  double delta_max = 0.0;
  std::vector<std::uint32_t> counts;  // rows * bins
  std::size_t discarded_behind = 0;
  std::size_t discarded_range = 0;

  double bin_width() const { return delta_max / static_cast<double>(bins); }
  double bin_center(std::size_t b) const { return (static_cast<double>(b) + 0.5) * bin_width(); }
  std::vector<double> bin_edges() const {
    std::vector<double> e(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) e[b] = static_cast<double>(b) * bin_width();
    return e;
  }
  std::uint32_t at(std::size_t row, std::size_t bin) const { return counts[row * bins + bin]; }
  std::uint64_t total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  }
};

inline VDisparityHistogram compute_vdisparity(const DepthImage& img, std::size_t n_bins,
                                              double delta_max,
                                              DisparityAxis axis = DisparityAxis::kColumnForward) {
  if (n_bins < 2) throw DomainError("compute_vdisparity: need at least 2 bins");
  if (!(delta_max > 0.0)) throw DomainError("compute_vdisparity: delta_max must be positive");
  VDisparityHistogram h;
  h.rows = img.rows();
  h.bins = n_bins;
  h.delta_max = delta_max;
  h.counts.assign(h.rows * h.bins, 0);
  const double width = h.bin_width();
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t q = 0; q < img.cols; ++q) {
      const std::size_t c = img.cell(r, q);
      if (!img.populated(c)) continue;
      const double delta =
          cell_disparity(img.range[c], img.layer_angles[r], img.column_theta(q), axis);
      if (std::isnan(delta)) {
        ++h.discarded_behind;
        continue;
      }
      if (!(delta > 0.0 && delta <= delta_max)) {
        ++h.discarded_range;
        continue;
      }
      auto b = static_cast<std::size_t>(delta / width);
      if (b >= n_bins) b = n_bins - 1;
      ++h.counts[r * n_bins + b];
    }
  }
  return h;
}

/// Road disparity model delta(row) = slope * row + intercept, +/- tolerance.
struct RoadLine {
  double slope = 0.0;
  double intercept = 0.0;
  double tolerance = 0.0;

  double at(double row) const { return slope * row + intercept; }
};

struct RoadLineOptions {
  bool weighted = true;         // weight each (row, bin) sample by its count
  double tolerance_bins = 1.5;  // tolerance in histogram bin widths
};

/**
 * Least-squares road line through the `top_k_per_row` most populated bins of
 * every non-empty row, using bin centres as disparity samples.
 */
inline RoadLine fit_road_line(const VDisparityHistogram& hist, std::size_t top_k_per_row,
                              const RoadLineOptions& opts = {}) {
  if (top_k_per_row == 0) throw DomainError("fit_road_line: top_k_per_row must be >= 1");
  double sw = 0.0, sx = 0.0, sy = 0.0;
  std::vector<std::tuple<double, double, double>> samples;  // row, delta, weight
  std::size_t populated_rows = 0;
  std::vector<std::size_t> order(hist.bins);
  for (std::size_t r = 0; r < hist.rows; ++r) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return hist.at(r, a) > hist.at(r, b); });
    bool any = false;
    for (std::size_t k = 0; k < std::min(top_k_per_row, hist.bins); ++k) {
      const std::uint32_t c = hist.at(r, order[k]);
      if (c == 0) break;
      any = true;
      const double w = opts.weighted ? static_cast<double>(c) : 1.0;
      samples.emplace_back(static_cast<double>(r), hist.bin_center(order[k]), w);
      sw += w;
      sx += w * static_cast<double>(r);
      sy += w * hist.bin_center(order[k]);
    }
    populated_rows += any;
  }
  if (populated_rows < 2) {
    throw DegenerateError("fit_road_line: need at least 2 populated rows, got " +
                          std::to_string(populated_rows));
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y, w] : samples) {
    sxx += w * (x - mx) * (x - mx);
    sxy += w * (x - mx) * (y - my);
  }
  RoadLine line;
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  line.tolerance = opts.tolerance_bins * hist.bin_width();
  if (!(line.tolerance > 0.0)) throw DomainError("fit_road_line: tolerance must be positive");
  return line;
}

enum class RoadLabel : std::uint8_t { kNoReturn = 0, kRoad, kPositiveObstacle, kNegativeObstacle };

/// Per-cell label. Cells without a usable disparity (behind the reference
/// plane) are reported as kNoReturn.
inline std::vector<RoadLabel> classify_road(const DepthImage& img, const RoadLine& line,
                                            DisparityAxis axis = DisparityAxis::kColumnForward) {
  std::vector<RoadLabel> labels(img.range.size(), RoadLabel::kNoReturn);
  for (std::size_t r = 0; r < img.rows(); ++r) {
    const double expected = line.at(static_cast<double>(r));
    for (std::size_t q = 0; q < img.cols; ++q) {
      const std::size_t c = img.cell(r, q);
      if (!img.populated(c)) continue;
      const double delta =
          cell_disparity(img.range[c], img.layer_angles[r], img.column_theta(q), axis);
      if (std::isnan(delta)) continue;
      if (std::abs(delta - expected) <= line.tolerance) {
        labels[c] = RoadLabel::kRoad;
      } else if (delta > expected) {
        labels[c] = RoadLabel::kPositiveObstacle;
      } else {
        labels[c] = RoadLabel::kNegativeObstacle;
      }
    }
  }
  return labels;
}

/// Maps cell labels back to the points that built the image.
inline std::vector<RoadLabel> label_points(const DepthImage& img,
                                           const std::vector<RoadLabel>& cell_labels) {
  std::vector<RoadLabel> out(img.point_cell.size(), RoadLabel::kNoReturn);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (img.point_cell[i] >= 0) out[i] = cell_labels[static_cast<std::size_t>(img.point_cell[i])];
  }
  return out;
}

struct LidarHistogramParams {
  std::vector<double> layer_angles;
  double azimuth_bin_width = 0.2 * std::numbers::pi / 180.0;
  std::size_t n_bins = 160;
  double delta_max = 0.5;
  std::size_t top_k_per_row = 1;
  RoadLineOptions line;
  DisparityAxis axis = DisparityAxis::kColumnForward;
};

struct RoadSegmentation {
  DepthImage image;
  VDisparityHistogram histogram;
  RoadLine line;
  std::vector<RoadLabel> cell_labels;
  std::vector<RoadLabel> point_labels;
};

/// Full Lidar-histogram pass over one sensor-frame scan.
inline RoadSegmentation segment_road(const PointCloud& sensor_cloud,
                                     const LidarHistogramParams& params) {
  RoadSegmentation seg;
  seg.image = build_depth_image(sensor_cloud, params.layer_angles, params.azimuth_bin_width);
  seg.histogram = compute_vdisparity(seg.image, params.n_bins, params.delta_max, params.axis);
  seg.line = fit_road_line(seg.histogram, params.top_k_per_row, params.line);
  seg.cell_labels = classify_road(seg.image, seg.line, params.axis);
  seg.point_labels = label_points(seg.image, seg.cell_labels);
  return seg;
}

}  // namespace lidarprior::ground

#endif  // LIDARPRIOR_GROUND_HPP
