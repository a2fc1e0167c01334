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

#ifndef LIDARPRIOR_CORE_HPP
#define LIDARPRIOR_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "lidarprior/error.hpp"

namespace lidarprior {

// Meters, right-handed: x forward, y left, z up.
using Point3 = Eigen::Vector3d;

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

/**
 * Range/angle form of a point as seen from the sensor.
 *
 * theta is the horizontal polar angle from +x in (-pi, pi]; phi is the
 * elevation above the xy plane (positive up).
 */
struct SphericalPoint {
  double d = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

inline SphericalPoint cartesian_to_spherical(const Point3& p) {
  const double d = p.norm();
  if (!(d > 0.0)) {
    throw DomainError("cartesian_to_spherical: zero vector has no direction");
  }
  SphericalPoint s;
  s.d = d;
  s.theta = std::atan2(p.y(), p.x());
  if (s.theta == -std::numbers::pi) s.theta = std::numbers::pi;
  s.phi = std::atan2(p.z(), std::hypot(p.x(), p.y()));
  return s;
}

inline Point3 spherical_to_cartesian(const SphericalPoint& s) {
  const double c = std::cos(s.phi);
  return {s.d * c * std::cos(s.theta), s.d * c * std::sin(s.theta),
          s.d * std::sin(s.phi)};
}

/// Unit direction for a ray at (theta, phi).
inline Point3 ray_direction(double theta, double phi) {
  return spherical_to_cartesian({1.0, theta, phi});
}

struct PointCloud {
  std::vector<Point3> points;
  // Reflectance in [0, 1]; same length as points when present.
  std::optional<std::vector<float>> intensity;
  std::uint64_t frame_id = 0;
  double timestamp = 0.0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  bool operator==(const PointCloud& other) const = default;
};

/**
 * Rigid transform from the sensor frame to the global frame.
 *
 * Rotation is R = Rz(yaw) * Ry(pitch) * Rx(roll); a point maps to R p + t.
 * The pose is interpreted as the pose of the sensor itself, not the vehicle.
 */
struct Pose {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  Eigen::Matrix3d rotation() const {
    return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
            Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
  }

  Eigen::Isometry3d isometry() const {
    Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
    iso.linear() = rotation();
    iso.translation() = translation;
    return iso;
  }

  Point3 apply(const Point3& p) const { return rotation() * p + translation; }

  bool operator==(const Pose& other) const = default;
};

inline PointCloud transform_to_global(const PointCloud& cloud, const Pose& pose) {
  PointCloud out = cloud;
  const Eigen::Matrix3d r = pose.rotation();
  for (auto& p : out.points) p = r * p + pose.translation;
  return out;
}

inline PointCloud transform_cloud(const PointCloud& cloud,
                                  const Eigen::Isometry3d& iso) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = iso * p;
  return out;
}

struct Frame {
  PointCloud cloud;
  Pose pose;
};

/// Frames ordered by strictly increasing timestamp with unique ids.
struct FrameSequence {
  std::vector<Frame> frames;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }

  void validate() const {
    for (std::size_t i = 1; i < frames.size(); ++i) {
      if (!(frames[i].cloud.timestamp > frames[i - 1].cloud.timestamp)) {
        throw InputError("frame sequence: timestamps not strictly increasing at index " +
                         std::to_string(i));
      }
    }
    std::vector<std::uint64_t> ids;
    ids.reserve(frames.size());
    for (const auto& f : frames) ids.push_back(f.cloud.frame_id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw InputError("frame sequence: duplicate frame_id");
    }
  }
};

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace lidarprior

#endif  // LIDARPRIOR_CORE_HPP
