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

#ifndef LIDARPRIOR_BOX_HPP
#define LIDARPRIOR_BOX_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lidarprior/core.hpp"
#include "lidarprior/error.hpp"

namespace lidarprior {

using Point2 = Eigen::Vector2d;

/**
 * Gravity-aligned box: rotated by `yaw` about z, extending `half_extents`
 * along its local axes. `margin` inflates every half extent additively when
 * testing containment.
 */
struct OrientedBox {
  Point3 center = Point3::Zero();
  double yaw = 0.0;
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();
  double margin = 0.0;

  /// Longer footprint side along local x; yaw folded into (-pi/2, pi/2].
  void canonicalize() {
    if (half_extents.y() > half_extents.x()) {
      std::swap(half_extents.x(), half_extents.y());
      yaw += std::numbers::pi / 2.0;
    }
    yaw = wrap_angle(yaw);
    if (yaw <= -std::numbers::pi / 2.0) yaw += std::numbers::pi;
    if (yaw > std::numbers::pi / 2.0) yaw -= std::numbers::pi;
  }

  Point3 to_local(const Point3& p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const Point3 d = p - center;
    return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
  }

  bool contains(const Point3& p, double extra_margin = 0.0) const {
    const Point3 l = to_local(p);
    const double m = margin + extra_margin;
    return std::abs(l.x()) <= half_extents.x() + m && std::abs(l.y()) <= half_extents.y() + m &&
           std::abs(l.z()) <= half_extents.z() + m;
  }

  double volume() const { return 8.0 * half_extents.prod(); }
  double footprint_area() const { return 4.0 * half_extents.x() * half_extents.y(); }

  /// Footprint corners, counter-clockwise.
  std::array<Point2, 4> footprint() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const Point2 ex(c * half_extents.x(), s * half_extents.x());
    const Point2 ey(-s * half_extents.y(), c * half_extents.y());
    const Point2 ctr(center.x(), center.y());
    return {ctr - ex - ey, ctr + ex - ey, ctr + ex + ey, ctr - ex + ey};
  }

  bool operator==(const OrientedBox&) const = default;
};

// ---------------------------------------------------------------------------
// 2-D hull and minimum-area rectangle
// ---------------------------------------------------------------------------

inline double cross2(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Monotone chain hull, counter-clockwise, without collinear vertices.
inline std::vector<Point2> convex_hull_2d(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline double polygon_area(std::span<const Point2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

struct Rect2 {
  Point2 center = Point2::Zero();
  double angle = 0.0;  // direction of the first side
  double half_u = 0.0;
  double half_v = 0.0;

  double area() const { return 4.0 * half_u * half_v; }
};

/**
 * Minimum-area enclosing rectangle of a convex CCW polygon by rotating
 * calipers. One side of the optimum is flush with a hull edge; for every
 * edge the three remaining support vertices (far along the edge, behind it,
 * and opposite) advance monotonically around the hull.
 */
inline Rect2 min_area_rect(std::span<const Point2> hull) {
  Rect2 best;
  const std::size_t n = hull.size();
  if (n == 0) return best;
  if (n == 1) {
    best.center = hull[0];
    return best;
  }
  if (n == 2) {
    const Point2 d = hull[1] - hull[0];
    best.center = 0.5 * (hull[0] + hull[1]);
    best.angle = std::atan2(d.y(), d.x());
    best.half_u = 0.5 * d.norm();
    return best;
  }
  auto next = [n](std::size_t i) { return (i + 1) % n; };
  std::size_t far_e = 0, far_n = 0, near_e = 0;
  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e = (hull[next(i)] - hull[i]).normalized();
    const Point2 nrm(-e.y(), e.x());  // inward for a CCW polygon
    if (i == 0) {
      for (std::size_t j = 0; j < n; ++j) {
        if (hull[j].dot(e) > hull[far_e].dot(e)) far_e = j;
        if (hull[j].dot(nrm) > hull[far_n].dot(nrm)) far_n = j;
        if (hull[j].dot(e) < hull[near_e].dot(e)) near_e = j;
      }
    } else {
      while (hull[next(far_e)].dot(e) > hull[far_e].dot(e)) far_e = next(far_e);
      while (hull[next(far_n)].dot(nrm) > hull[far_n].dot(nrm)) far_n = next(far_n);
      while (hull[next(near_e)].dot(e) < hull[near_e].dot(e)) near_e = next(near_e);
    }
    const double lo_e = hull[near_e].dot(e), hi_e = hull[far_e].dot(e);
    const double lo_n = hull[i].dot(nrm), hi_n = hull[far_n].dot(nrm);
    const double area = (hi_e - lo_e) * (hi_n - lo_n);
    if (area < best_area) {
      best_area = area;
      best.angle = std::atan2(e.y(), e.x());
      best.half_u = 0.5 * (hi_e - lo_e);
      best.half_v = 0.5 * (hi_n - lo_n);
      best.center = e * (0.5 * (hi_e + lo_e)) + nrm * (0.5 * (hi_n + lo_n));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Box fitting
// ---------------------------------------------------------------------------

/// Yaw-only minimum-volume box: z span from min/max z, footprint from the
/// minimum-area rectangle of the xy hull.
inline OrientedBox fit_min_volume_box(std::span<const Point3> points) {
  if (points.empty()) throw DomainError("fit_min_volume_box: no points");
  std::vector<Point2> xy;
  xy.reserve(points.size());
  double zlo = points[0].z(), zhi = points[0].z();
  for (const auto& p : points) {
    xy.emplace_back(p.x(), p.y());
    zlo = std::min(zlo, p.z());
    zhi = std::max(zhi, p.z());
  }
  const auto hull = convex_hull_2d(std::move(xy));
  const Rect2 r = min_area_rect(hull);
  OrientedBox box;
  box.center = {r.center.x(), r.center.y(), 0.5 * (zlo + zhi)};
  box.yaw = r.angle;
  box.half_extents = {r.half_u, r.half_v, 0.5 * (zhi - zlo)};
  box.canonicalize();
  return box;
}

/**
 * Yaw-only box for partially observed objects. A scan usually sees one or
 * two faces; the hull is then close to a right triangle whose hypotenuse
 * rectangle ties the true one in area. Among hull-edge headings this picks
 * the one whose rectangle edges lie closest to the points (sum of distances
 * to the nearest side), breaking ties by area.
 */
inline OrientedBox fit_edge_fitted_box(std::span<const Point3> points) {
  if (points.empty()) throw DomainError("fit_edge_fitted_box: no points");
  std::vector<Point2> xy;
  xy.reserve(points.size());
  double zlo = points[0].z(), zhi = points[0].z();
  for (const auto& p : points) {
    xy.emplace_back(p.x(), p.y());
    zlo = std::min(zlo, p.z());
    zhi = std::max(zhi, p.z());
  }
  const auto hull = convex_hull_2d(xy);
  if (hull.size() < 3) return fit_min_volume_box(points);

  double best_cost = std::numeric_limits<double>::infinity();
  double best_area = std::numeric_limits<double>::infinity();
  Rect2 best;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2 e = (hull[(i + 1) % hull.size()] - hull[i]).normalized();
    const Point2 nrm(-e.y(), e.x());
    double lo_u = std::numeric_limits<double>::infinity(), hi_u = -lo_u;
    double lo_v = lo_u, hi_v = -lo_u;
    for (const auto& h : hull) {
      lo_u = std::min(lo_u, h.dot(e));
      hi_u = std::max(hi_u, h.dot(e));
      lo_v = std::min(lo_v, h.dot(nrm));
      hi_v = std::max(hi_v, h.dot(nrm));
    }
    double cost = 0.0;
    for (const auto& p : xy) {
      const double u = p.dot(e), v = p.dot(nrm);
      cost += std::min(std::min(u - lo_u, hi_u - u), std::min(v - lo_v, hi_v - v));
    }
    const double area = (hi_u - lo_u) * (hi_v - lo_v);
    const double tol = 1e-9 * std::max(1.0, best_cost);
    if (cost < best_cost - tol || (cost <= best_cost + tol && area < best_area)) {
      best_cost = std::min(cost, best_cost);
      best_area = area;
      best.angle = std::atan2(e.y(), e.x());
      best.half_u = 0.5 * (hi_u - lo_u);
      best.half_v = 0.5 * (hi_v - lo_v);
      best.center = e * (0.5 * (hi_u + lo_u)) + nrm * (0.5 * (hi_v + lo_v));
    }
  }
  OrientedBox box;
  box.center = {best.center.x(), best.center.y(), 0.5 * (zlo + zhi)};
  box.yaw = best.angle;
  box.half_extents = {best.half_u, best.half_v, 0.5 * (zhi - zlo)};
  box.canonicalize();
  return box;
}

/// Linear-interpolated quantile of an unsorted sample (copies).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw DomainError("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return v[lo] + t * (v[hi] - v[lo]);
}

/**
 * Outlier-tolerant box for planar clusters: heading from the principal xy
 * direction, extents from the [q, 1 - q] quantiles of the projected
 * coordinates along each box axis.
 */
inline OrientedBox fit_planar_box(std::span<const Point3> points, double trim_quantile) {
  if (points.size() < 3) {
    throw DomainError("fit_planar_box: need at least 3 points, got " +
                      std::to_string(points.size()));
  }
  if (!(trim_quantile >= 0.0 && trim_quantile <= 0.1)) {
    throw DomainError("fit_planar_box: trim_quantile must lie in [0, 0.1]");
  }
  Point2 mean = Point2::Zero();
  for (const auto& p : points) mean += p.head<2>();
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Point2 d = p.head<2>() - mean;
    cov.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const Point2 axis = es.eigenvectors().col(1);
  const double yaw = std::atan2(axis.y(), axis.x());
  const double c = std::cos(yaw), s = std::sin(yaw);

  std::vector<double> u, v, z;
  u.reserve(points.size());
  v.reserve(points.size());
  z.reserve(points.size());
  for (const auto& p : points) {
    u.push_back(c * p.x() + s * p.y());
    v.push_back(-s * p.x() + c * p.y());
    z.push_back(p.z());
  }
  auto span_of = [&](std::vector<double>& a) {
    return std::pair{quantile(a, trim_quantile), quantile(a, 1.0 - trim_quantile)};
  };
  const auto [u0, u1] = span_of(u);
  const auto [v0, v1] = span_of(v);
  const auto [z0, z1] = span_of(z);
  const double uc = 0.5 * (u0 + u1), vc = 0.5 * (v0 + v1);
  OrientedBox box;
  box.center = {c * uc - s * vc, s * uc + c * vc, 0.5 * (z0 + z1)};
  box.yaw = yaw;
  box.half_extents = {0.5 * (u1 - u0), 0.5 * (v1 - v0), 0.5 * (z1 - z0)};
  box.canonicalize();
  return box;
}

// ---------------------------------------------------------------------------
// Overlap
// ---------------------------------------------------------------------------

/// Intersection of two convex CCW polygons (Sutherland-Hodgman).
inline std::vector<Point2> clip_convex(std::vector<Point2> subject, std::span<const Point2> clip) {
  for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
    const Point2& a = clip[i];
    const Point2& b = clip[(i + 1) % clip.size()];
    std::vector<Point2> out;
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const Point2& p = subject[j];
      const Point2& q = subject[(j + 1) % subject.size()];
      const double sp = cross2(a, b, p), sq = cross2(a, b, q);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

inline double footprint_intersection_area(const OrientedBox& a, const OrientedBox& b) {
  const auto fa = a.footprint();
  const auto fb = b.footprint();
  const auto poly = clip_convex({fa.begin(), fa.end()}, fb);
  return poly.size() < 3 ? 0.0 : std::abs(polygon_area(poly));
}

/// Volume IoU of two gravity-aligned boxes (footprint overlap x z overlap).
inline double box_iou(const OrientedBox& a, const OrientedBox& b) {
  const double z_lo = std::max(a.center.z() - a.half_extents.z(), b.center.z() - b.half_extents.z());
  const double z_hi = std::min(a.center.z() + a.half_extents.z(), b.center.z() + b.half_extents.z());
  const double dz = std::max(0.0, z_hi - z_lo);
  const double inter = dz > 0.0 ? footprint_intersection_area(a, b) * dz : 0.0;
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace lidarprior

#endif  // LIDARPRIOR_BOX_HPP
