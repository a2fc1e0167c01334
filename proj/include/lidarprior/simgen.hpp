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

#ifndef LIDARPRIOR_SIMGEN_HPP
#define LIDARPRIOR_SIMGEN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "lidarprior/box.hpp"
#include "lidarprior/core.hpp"
#include "lidarprior/error.hpp"
#include "lidarprior/parallel.hpp"
#include "lidarprior/random.hpp"
#include "lidarprior/text.hpp"

namespace lidarprior::simgen {

enum class TruthLabel : int { kRoad = 0, kStatic = 1, kNsso = 2, kDynamic = 3 };

inline bool is_foreground(TruthLabel l) {
  return l == TruthLabel::kNsso || l == TruthLabel::kDynamic;
}

inline std::string_view truth_label_name(TruthLabel l) {
  switch (l) {
    case TruthLabel::kRoad: return "road";
    case TruthLabel::kStatic: return "static";
    case TruthLabel::kNsso: return "nsso";
    case TruthLabel::kDynamic: return "dynamic";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Scene description
// ---------------------------------------------------------------------------

struct SensorSpec {
  std::vector<double> layer_angles;  // radians, ascending
  double azimuth_step = 0.2 * std::numbers::pi / 180.0;
  double max_range = 100.0;
  double noise_sigma = 0.02;

  std::size_t columns() const {
    return static_cast<std::size_t>(std::llround(2.0 * std::numbers::pi / azimuth_step));
  }
};

inline std::vector<double> uniform_layers(std::size_t n, double min_deg, double max_deg) {
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    a[i] = deg_to_rad(min_deg + t * (max_deg - min_deg));
  }
  return a;
}

/// Straight-line ego path; the pose is the sensor pose.
struct EgoSpec {
  Point3 start{0.0, 0.0, 2.0};
  Eigen::Vector2d velocity{3.0, 0.0};
  double yaw = 0.0;
  double pose_noise_translation = 0.0;  // sigma, meters, drive mode only
  double pose_noise_angle = 0.0;        // sigma, radians, drive mode only
};

struct RoadSpec {
  double height = 0.0;
  double slope = 0.0;  // radians, rise along +x
};

struct FacadeSpec {
  std::string name;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  Eigen::Vector2d end = Eigen::Vector2d::Zero();
  double base = -1.0;
  double height = 10.0;
};

struct CuboidSpec {
  std::string name;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double base = 0.0;  // bottom face height
  Eigen::Vector3d size{1.0, 1.0, 1.0};
  double yaw = 0.0;

  OrientedBox box_at(const Eigen::Vector2d& c) const {
    OrientedBox b;
    b.center = {c.x(), c.y(), base + 0.5 * size.z()};
    b.yaw = yaw;
    b.half_extents = 0.5 * size;
    return b;
  }
};

struct NssoSpec : CuboidSpec {
  bool in_map = false;
  bool in_drive = true;
};

struct ActorSpec : CuboidSpec {
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
};

enum class SimMode { kMap, kDrive };

struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t frames = 50;
  double frame_rate = 10.0;
  SensorSpec sensor;
  EgoSpec ego;
  RoadSpec road;
  std::vector<FacadeSpec> facades;
  std::vector<CuboidSpec> clutter;
  std::vector<NssoSpec> nsso;
  std::vector<ActorSpec> actors;

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw InputError("scene spec: " + field + ": " + why);
    };
    if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) fail("scene.frame_rate", "must be > 0");
    if (frames == 0) fail("scene.frames", "must be >= 1");
    if (sensor.layer_angles.empty()) fail("sensor.layers", "must be >= 1");
    for (std::size_t i = 1; i < sensor.layer_angles.size(); ++i) {
      if (!(sensor.layer_angles[i] > sensor.layer_angles[i - 1])) {
        fail("sensor.layer_angles_deg", "must be strictly ascending");
      }
    }
    for (double a : sensor.layer_angles) {
      if (!(std::abs(a) < std::numbers::pi / 2)) fail("sensor.layer_angles_deg", "out of range");
    }
    if (!(sensor.azimuth_step > 0.0 && sensor.azimuth_step <= std::numbers::pi)) {
      fail("sensor.azimuth_step_deg", "must be in (0, 180]");
    }
    if (!(sensor.max_range > 0.0)) fail("sensor.max_range", "must be > 0");
    if (!(sensor.noise_sigma >= 0.0)) fail("sensor.noise_sigma", "must be >= 0");
    if (!(ego.pose_noise_translation >= 0.0)) fail("ego.pose_noise_translation", "must be >= 0");
    if (!(ego.pose_noise_angle >= 0.0)) fail("ego.pose_noise_angle_deg", "must be >= 0");
    if (!(std::abs(road.slope) < std::numbers::pi / 4)) fail("road.slope_deg", "must be < 45");
    for (const auto& f : facades) {
      if ((f.end - f.start).norm() <= 0.0) fail("facade " + f.name + ".end", "zero length");
      if (!(f.height > 0.0)) fail("facade " + f.name + ".height", "must be > 0");
    }
    auto cuboid = [&](std::string_view kind, const CuboidSpec& c) {
      if (!(c.size.minCoeff() > 0.0)) {
        fail(std::string(kind) + " " + c.name + ".size", "must be positive");
      }
    };
    for (const auto& c : clutter) cuboid("clutter", c);
    for (const auto& c : nsso) cuboid("nsso", c);
    for (const auto& c : actors) cuboid("actor", c);
  }

  double time_of(std::size_t frame) const { return static_cast<double>(frame) / frame_rate; }

  Pose true_pose(std::size_t frame) const {
    Pose p;
    const double t = time_of(frame);
    p.translation = ego.start + Point3(ego.velocity.x() * t, ego.velocity.y() * t, 0.0);
    p.yaw = ego.yaw;
    return p;
  }
};

/// Default evaluation scene: straight street between two facades.
inline SceneSpec default_scene() {
  SceneSpec s;
  s.sensor.layer_angles = uniform_layers(32, -25.0, 5.0);
  s.ego.pose_noise_translation = 0.05;
  s.ego.pose_noise_angle = deg_to_rad(0.2);
  s.facades.push_back({"left", {-30.0, 12.0}, {60.0, 12.0}, -1.0, 10.0});
  s.facades.push_back({"right", {-30.0, -12.0}, {60.0, -12.0}, -1.0, 10.0});
  auto cub = [](std::string name, double x, double y, double base, Eigen::Vector3d size,
                double yaw_deg) {
    CuboidSpec c;
    c.name = std::move(name);
    c.center = {x, y};
    c.base = base;
    c.size = size;
    c.yaw = deg_to_rad(yaw_deg);
    return c;
  };
  s.clutter.push_back(cub("kiosk", 25.0, 8.5, 0.0, {2.0, 2.0, 2.5}, 0.0));
  s.clutter.push_back(cub("bench", -10.0, -9.0, 0.0, {1.5, 1.5, 1.0}, 20.0));
  s.clutter.push_back(cub("planter", 45.0, 9.0, 0.0, {3.0, 1.0, 1.5}, 0.0));
  NssoSpec parked;
  static_cast<CuboidSpec&>(parked) = cub("parked", -4.0, -6.5, 0.4, {4.2, 1.8, 1.5}, 0.0);
  parked.in_map = false;
  parked.in_drive = true;
  s.nsso.push_back(parked);
  ActorSpec a;
  static_cast<CuboidSpec&>(a) = cub("car_a", 10.0, 3.5, 0.4, {4.5, 1.9, 1.5}, 0.0);
  a.velocity = {5.0, 0.0};
  s.actors.push_back(a);
  ActorSpec b;
  static_cast<CuboidSpec&>(b) = cub("car_b", 16.0, -3.5, 0.4, {4.5, 1.9, 1.6}, 0.0);
  b.velocity = {4.0, 0.0};
  s.actors.push_back(b);
  return s;
}

namespace detail {

inline std::string vec_text(std::initializer_list<double> v) {
  std::string out;
  for (double x : v) {
    if (!out.empty()) out += ' ';
    out += text::format_double(x);
  }
  return out;
}

}  // namespace detail

inline std::string format_scene(const SceneSpec& s) {
  using detail::vec_text;
  using text::format_double;
  std::string out;
  auto put = [&](std::string_view k, const std::string& v) {
    out += std::string(k) + " = " + v + "\n";
  };
  out += "[scene]\n";
  put("seed", std::to_string(s.seed));
  put("frames", std::to_string(s.frames));
  put("frame_rate", format_double(s.frame_rate));
  out += "\n[sensor]\n";
  std::string layers;
  for (double a : s.sensor.layer_angles) {
    if (!layers.empty()) layers += ", ";
    layers += format_double(rad_to_deg(a));
  }
  put("layer_angles_deg", layers);
  put("azimuth_step_deg", format_double(rad_to_deg(s.sensor.azimuth_step)));
  put("max_range", format_double(s.sensor.max_range));
  put("noise_sigma", format_double(s.sensor.noise_sigma));
  out += "\n[ego]\n";
  put("start", vec_text({s.ego.start.x(), s.ego.start.y(), s.ego.start.z()}));
  put("velocity", vec_text({s.ego.velocity.x(), s.ego.velocity.y()}));
  put("yaw_deg", format_double(rad_to_deg(s.ego.yaw)));
  put("pose_noise_translation", format_double(s.ego.pose_noise_translation));
  put("pose_noise_angle_deg", format_double(rad_to_deg(s.ego.pose_noise_angle)));
  out += "\n[road]\n";
  put("height", format_double(s.road.height));
  put("slope_deg", format_double(rad_to_deg(s.road.slope)));
  for (const auto& f : s.facades) {
    out += "\n[facade " + f.name + "]\n";
    put("start", vec_text({f.start.x(), f.start.y()}));
    put("end", vec_text({f.end.x(), f.end.y()}));
    put("base", format_double(f.base));
    put("height", format_double(f.height));
  }
  auto cuboid = [&](std::string_view kind, const CuboidSpec& c) {
    out += "\n[" + std::string(kind) + " " + c.name + "]\n";
    put("center", vec_text({c.center.x(), c.center.y()}));
    put("base", format_double(c.base));
    put("size", vec_text({c.size.x(), c.size.y(), c.size.z()}));
    put("yaw_deg", format_double(rad_to_deg(c.yaw)));
  };
  for (const auto& c : s.clutter) cuboid("clutter", c);
  for (const auto& c : s.nsso) {
    cuboid("nsso", c);
    put("in_map", c.in_map ? "true" : "false");
    put("in_drive", c.in_drive ? "true" : "false");
  }
  for (const auto& c : s.actors) {
    cuboid("actor", c);
    put("velocity", vec_text({c.velocity.x(), c.velocity.y()}));
  }
  return out;
}

/**
 * Reads a scene file. Sections: [scene], [sensor], [ego], [road], and any
 * number of [facade NAME], [clutter NAME], [nsso NAME], [actor NAME].
 * Angles are in degrees. Errors name the offending field.
 */
inline SceneSpec parse_scene(const text::ConfigFile& cfg) {
  SceneSpec s;
  std::size_t n_layers = 32;
  double layer_min = -25.0, layer_max = 5.0;
  std::vector<double> explicit_layers;
  for (const auto& sec : cfg.sections) {
    const std::string prefix = sec.kind + (sec.name.empty() ? "" : " " + sec.name) + ".";
    if (sec.kind == "facade" || sec.kind == "clutter" || sec.kind == "nsso" ||
        sec.kind == "actor") {
      if (sec.name.empty()) {
        throw InputError("scene spec: [" + sec.kind + "] at line " + std::to_string(sec.line) +
                         " needs a name");
      }
      if (sec.kind == "facade") s.facades.push_back({sec.name, {}, {}, -1.0, 10.0});
      if (sec.kind == "clutter") s.clutter.push_back({sec.name});
      if (sec.kind == "nsso") s.nsso.emplace_back().name = sec.name;
      if (sec.kind == "actor") s.actors.emplace_back().name = sec.name;
    }
    for (const auto& [key, value] : sec.entries) {
      const std::string field = prefix + key;
      auto d = [&] { return text::parse_double(value, field); };
      auto u = [&] {
        const auto v = text::parse_int(value, field);
        if (v < 0) throw InputError("scene spec: " + field + ": must be non-negative");
        return static_cast<std::size_t>(v);
      };
      auto v2 = [&] {
        const auto v = text::parse_doubles(value, 2, field);
        return Eigen::Vector2d(v[0], v[1]);
      };
      auto v3 = [&] {
        const auto v = text::parse_doubles(value, 3, field);
        return Eigen::Vector3d(v[0], v[1], v[2]);
      };
      auto b = [&] {
        if (value == "true" || value == "1") return true;
        if (value == "false" || value == "0") return false;
        throw ParseError(field + ": expected true/false");
      };
      auto unknown = [&] { throw InputError("scene spec: unknown field " + field); };
      auto cuboid_key = [&](CuboidSpec& c) {
        if (key == "center") c.center = v2();
        else if (key == "base") c.base = d();
        else if (key == "size") c.size = v3();
        else if (key == "yaw_deg") c.yaw = deg_to_rad(d());
        else return false;
        return true;
      };

      if (sec.kind == "scene") {
        if (key == "seed") s.seed = u();
        else if (key == "frames") s.frames = u();
        else if (key == "frame_rate") s.frame_rate = d();
        else unknown();
      } else if (sec.kind == "sensor") {
        if (key == "layers") n_layers = u();
        else if (key == "layer_min_deg") layer_min = d();
        else if (key == "layer_max_deg") layer_max = d();
        else if (key == "layer_angles_deg") {
          explicit_layers.clear();
          std::string buf(value);
          std::replace(buf.begin(), buf.end(), ',', ' ');
          for (auto tok : text::split_ws(buf)) {
            explicit_layers.push_back(deg_to_rad(text::parse_double(tok, field)));
          }
        } else if (key == "azimuth_step_deg") s.sensor.azimuth_step = deg_to_rad(d());
        else if (key == "max_range") s.sensor.max_range = d();
        else if (key == "noise_sigma") s.sensor.noise_sigma = d();
        else unknown();
      } else if (sec.kind == "ego") {
        if (key == "start") s.ego.start = v3();
        else if (key == "velocity") s.ego.velocity = v2();
        else if (key == "yaw_deg") s.ego.yaw = deg_to_rad(d());
        else if (key == "pose_noise_translation") s.ego.pose_noise_translation = d();
        else if (key == "pose_noise_angle_deg") s.ego.pose_noise_angle = deg_to_rad(d());
        else unknown();
      } else if (sec.kind == "road") {
        if (key == "height") s.road.height = d();
        else if (key == "slope_deg") s.road.slope = deg_to_rad(d());
        else unknown();
      } else if (sec.kind == "facade") {
        auto& f = s.facades.back();
        if (key == "start") f.start = v2();
        else if (key == "end") f.end = v2();
        else if (key == "base") f.base = d();
        else if (key == "height") f.height = d();
        else unknown();
      } else if (sec.kind == "clutter") {
        if (!cuboid_key(s.clutter.back())) unknown();
      } else if (sec.kind == "nsso") {
        auto& c = s.nsso.back();
        if (cuboid_key(c)) continue;
        if (key == "in_map") c.in_map = b();
        else if (key == "in_drive") c.in_drive = b();
        else unknown();
      } else if (sec.kind == "actor") {
        auto& c = s.actors.back();
        if (cuboid_key(c)) continue;
        if (key == "velocity") c.velocity = v2();
        else unknown();
      } else if (!sec.kind.empty()) {
        throw InputError("scene spec: unknown section [" + sec.kind + "] at line " +
                         std::to_string(sec.line));
      } else {
        unknown();
      }
    }
  }
  s.sensor.layer_angles =
      explicit_layers.empty() ? uniform_layers(n_layers, layer_min, layer_max) : explicit_layers;
  if (explicit_layers.empty() && n_layers == 0) {
    throw InputError("scene spec: sensor.layers: must be >= 1");
  }
  s.validate();
  return s;
}

inline SceneSpec load_scene(const std::string& path) {
  const auto cfg = text::ConfigFile::load(path);
  return parse_scene(cfg);
}

// ---------------------------------------------------------------------------
// Ray casting
// ---------------------------------------------------------------------------

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  TruthLabel label = TruthLabel::kRoad;
  std::int32_t owner = -1;  // scene object index, -1 for the road
};

/// Scene geometry instantiated at one time instant.
struct SceneSnapshot {
  struct Cuboid {
    OrientedBox box;
    TruthLabel label;
    std::int32_t owner;
    std::string name;
  };
  struct Facade {
    Eigen::Vector2d start, end;
    double base, top;
    std::int32_t owner;
  };
  Eigen::Vector3d road_normal = Eigen::Vector3d::UnitZ();
  double road_offset = 0.0;  // n·p + offset = 0
  std::vector<Facade> facades;
  std::vector<Cuboid> cuboids;
};

/// Object index layout: facades, clutter, nsso, actors, in spec order.
inline SceneSnapshot snapshot(const SceneSpec& spec, std::size_t frame, SimMode mode) {
  SceneSnapshot s;
  const double k = std::tan(spec.road.slope);
  s.road_normal = Eigen::Vector3d(-k, 0.0, 1.0).normalized();
  s.road_offset = -spec.road.height / std::sqrt(1.0 + k * k);
  std::int32_t owner = 0;
  for (const auto& f : spec.facades) {
    s.facades.push_back({f.start, f.end, f.base, f.base + f.height, owner++});
  }
  for (const auto& c : spec.clutter) {
    s.cuboids.push_back({c.box_at(c.center), TruthLabel::kStatic, owner++, c.name});
  }
  for (const auto& c : spec.nsso) {
    const bool present = mode == SimMode::kMap ? c.in_map : c.in_drive;
    if (present) {
      // Present in both stages means ordinary static structure.
      const TruthLabel l = c.in_map && c.in_drive ? TruthLabel::kStatic : TruthLabel::kNsso;
      s.cuboids.push_back({c.box_at(c.center), l, owner, c.name});
    }
    ++owner;
  }
  const double t = spec.time_of(frame);
  for (const auto& a : spec.actors) {
    if (mode == SimMode::kDrive) {
      s.cuboids.push_back({a.box_at(a.center + a.velocity * t), TruthLabel::kDynamic, owner, a.name});
    }
    ++owner;
  }
  return s;
}

inline double intersect_plane(const Point3& o, const Eigen::Vector3d& d, const Eigen::Vector3d& n,
                              double offset) {
  const double den = n.dot(d);
  if (std::abs(den) < 1e-12) return std::numeric_limits<double>::infinity();
  const double t = -(n.dot(o) + offset) / den;
  return t > 0.0 ? t : std::numeric_limits<double>::infinity();
}

inline double intersect_facade(const Point3& o, const Eigen::Vector3d& d,
                               const SceneSnapshot::Facade& f) {
  const Eigen::Vector2d e = f.end - f.start;
  const Eigen::Vector2d dd = d.head<2>();
  const double den = dd.x() * e.y() - dd.y() * e.x();
  if (std::abs(den) < 1e-12) return std::numeric_limits<double>::infinity();
  const Eigen::Vector2d w = f.start - o.head<2>();
  const double t = (w.x() * e.y() - w.y() * e.x()) / den;
  const double s = (w.x() * dd.y() - w.y() * dd.x()) / den;
  if (t <= 0.0 || s < 0.0 || s > 1.0) return std::numeric_limits<double>::infinity();
  const double z = o.z() + t * d.z();
  if (z < f.base || z > f.top) return std::numeric_limits<double>::infinity();
  return t;
}

/// Entry distance of a ray into an oriented box; rays starting inside miss.
inline double intersect_box(const Point3& o, const Eigen::Vector3d& d, const OrientedBox& b) {
  const Point3 lo = b.to_local(o);
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const Eigen::Vector3d ld(c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z());
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double h = b.half_extents(a);
    if (std::abs(ld(a)) < 1e-15) {
      if (std::abs(lo(a)) > h) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t0 = (-h - lo(a)) / ld(a);
    double t1 = (h - lo(a)) / ld(a);
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
  }
  if (tmin > tmax || tmin <= 0.0) return std::numeric_limits<double>::infinity();
  return tmin;
}

inline Hit cast_ray(const SceneSnapshot& scene, const Point3& o, const Eigen::Vector3d& d) {
  Hit h;
  h.t = intersect_plane(o, d, scene.road_normal, scene.road_offset);
  for (const auto& f : scene.facades) {
    const double t = intersect_facade(o, d, f);
    if (t < h.t) h = {t, TruthLabel::kStatic, f.owner};
  }
  for (const auto& c : scene.cuboids) {
    const double t = intersect_box(o, d, c.box);
    if (t < h.t) h = {t, c.label, c.owner};
  }
  return h;
}

struct SimulatedScan {
  PointCloud cloud;  // sensor frame
  std::vector<TruthLabel> labels;
  std::vector<std::int32_t> owners;
};

inline std::uint64_t frame_noise_seed(std::uint64_t seed, std::size_t frame) {
  return derive_seed(seed, static_cast<std::uint64_t>(frame));
}

/**
 * One full revolution from the true pose at `frame`. Rays are emitted
 * azimuth-major; azimuth column q points at (q - cols/2) * step. Range noise
 * is Gaussian, clamped at six sigma, and returns beyond max range are dropped.
 */
inline SimulatedScan simulate_scan(const SceneSpec& spec, std::size_t frame,
                                   SimMode mode = SimMode::kDrive) {
  if (frame >= spec.frames) throw DomainError("simulate_scan: frame index out of range");
  const auto scene = snapshot(spec, frame, mode);
  const Pose pose = spec.true_pose(frame);
  const Eigen::Matrix3d R = pose.rotation();
  const std::size_t cols = spec.sensor.columns();
  const double sigma = spec.sensor.noise_sigma;
  Rng rng(frame_noise_seed(spec.seed, frame));

  SimulatedScan out;
  out.cloud.frame_id = frame;
  out.cloud.timestamp = spec.time_of(frame);
  std::vector<float> intensity;
  for (std::size_t q = 0; q < cols; ++q) {
    const double theta =
        (static_cast<double>(q) - static_cast<double>(cols / 2)) * spec.sensor.azimuth_step;
    for (double phi : spec.sensor.layer_angles) {
      const Eigen::Vector3d dir = ray_direction(theta, phi);
      const Hit h = cast_ray(scene, pose.translation, R * dir);
      if (!(h.t <= spec.sensor.max_range)) continue;
      double noise = sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0;
      noise = std::clamp(noise, -6.0 * sigma, 6.0 * sigma);
      const double r = h.t + noise;
      if (r <= 0.0 || r > spec.sensor.max_range) continue;
      out.cloud.points.push_back(dir * r);
      out.labels.push_back(h.label);
      out.owners.push_back(h.owner);
      intensity.push_back(h.label == TruthLabel::kRoad ? 0.2f : 0.6f);
    }
  }
  out.cloud.intensity = std::move(intensity);
  return out;
}

// ---------------------------------------------------------------------------
// Sequences and ground truth
// ---------------------------------------------------------------------------

/// Box annotation shared by ground truth and detection outputs.
struct LabeledBox {
  std::int64_t id = 0;
  std::string label;
  OrientedBox box;
  std::size_t points = 0;

  bool operator==(const LabeledBox&) const = default;
};

struct FrameTruth {
  std::vector<TruthLabel> labels;
  std::vector<std::int32_t> owners;
  std::vector<LabeledBox> boxes;  // foreground objects present in the frame
  Pose true_pose;
};

struct GroundTruth {
  std::vector<FrameTruth> frames;
};

struct SimulatedSequence {
  FrameSequence frames;
  GroundTruth truth;
};

inline SimulatedSequence generate_sequence(const SceneSpec& spec, SimMode mode,
                                           std::size_t threads = 1) {
  spec.validate();
  SimulatedSequence seq;
  seq.frames.frames.resize(spec.frames);
  seq.truth.frames.resize(spec.frames);
  parallel_for(spec.frames, threads, [&](std::size_t k) {
    auto scan = simulate_scan(spec, k, mode);
    auto& ft = seq.truth.frames[k];
    ft.true_pose = spec.true_pose(k);
    Pose reported = ft.true_pose;
    if (mode == SimMode::kDrive &&
        (spec.ego.pose_noise_translation > 0.0 || spec.ego.pose_noise_angle > 0.0)) {
      Rng rng(derive_seed(spec.seed, (std::uint64_t{1} << 32) | k));
      const double st = spec.ego.pose_noise_translation;
      const double sa = spec.ego.pose_noise_angle;
      reported.translation += Point3(rng.normal(0.0, st), rng.normal(0.0, st),
                                     rng.normal(0.0, st));
      reported.yaw += rng.normal(0.0, sa);
      reported.pitch += rng.normal(0.0, sa);
      reported.roll += rng.normal(0.0, sa);
    }
    const auto scene = snapshot(spec, k, mode);
    for (const auto& c : scene.cuboids) {
      if (!is_foreground(c.label)) continue;
      LabeledBox lb;
      lb.id = c.owner;
      lb.label = std::string(truth_label_name(c.label));
      lb.box = c.box;
      lb.points = static_cast<std::size_t>(
          std::count(scan.owners.begin(), scan.owners.end(), c.owner));
      ft.boxes.push_back(std::move(lb));
    }
    ft.labels = std::move(scan.labels);
    ft.owners = std::move(scan.owners);
    seq.frames.frames[k] = Frame{std::move(scan.cloud), reported};
  });
  return seq;
}

// ---------------------------------------------------------------------------
// Text formats for labels and boxes
// ---------------------------------------------------------------------------

inline std::string format_labels(std::span<const TruthLabel> labels) {
  std::string out;
  out.reserve(labels.size() * 2);
  for (auto l : labels) {
    out += std::to_string(static_cast<int>(l));
    out += '\n';
  }
  return out;
}

inline std::vector<TruthLabel> parse_labels(std::string_view content) {
  std::vector<TruthLabel> out;
  std::size_t line = 0;
  for (std::size_t pos = 0; pos < content.size();) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    const auto tok = text::trim(content.substr(pos, nl - pos));
    pos = nl + 1;
    ++line;
    if (tok.empty()) continue;
    const auto v = text::parse_int(tok, "label line " + std::to_string(line));
    if (v < 0 || v > 3) {
      throw ParseError("label line " + std::to_string(line) + ": unknown label " +
                       std::to_string(v));
    }
    out.push_back(static_cast<TruthLabel>(v));
  }
  return out;
}

/// `# id label cx cy cz yaw hx hy hz points`, one box per line.
inline std::string format_boxes(std::span<const LabeledBox> boxes) {
  std::string out = "# id label cx cy cz yaw hx hy hz points\n";
  for (const auto& b : boxes) {
    out += std::to_string(b.id) + ' ' + b.label;
    for (double v : {b.box.center.x(), b.box.center.y(), b.box.center.z(), b.box.yaw,
                     b.box.half_extents.x(), b.box.half_extents.y(), b.box.half_extents.z()}) {
      out += ' ' + text::format_double(v);
    }
    out += ' ' + std::to_string(b.points) + '\n';
  }
  return out;
}

inline std::vector<LabeledBox> parse_boxes(std::string_view content) {
  std::vector<LabeledBox> out;
  std::size_t line = 0;
  for (std::size_t pos = 0; pos < content.size();) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    auto s = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line;
    if (auto h = s.find('#'); h != std::string_view::npos) s = s.substr(0, h);
    const auto t = text::split_ws(s);
    if (t.empty()) continue;
    const std::string where = "boxes line " + std::to_string(line);
    if (t.size() != 10) throw ParseError(where + ": expected 10 fields");
    LabeledBox b;
    b.id = text::parse_int(t[0], where);
    b.label = std::string(t[1]);
    double v[7];
    for (int i = 0; i < 7; ++i) v[i] = text::parse_double(t[2 + i], where);
    b.box.center = {v[0], v[1], v[2]};
    b.box.yaw = v[3];
    b.box.half_extents = {v[4], v[5], v[6]};
    const auto n = text::parse_int(t[9], where);
    if (n < 0) throw ParseError(where + ": negative point count");
    b.points = static_cast<std::size_t>(n);
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct PointMetrics {
  std::size_t tp = 0, fp = 0, fn = 0;

  double precision() const {
    if (tp + fp == 0) return fn == 0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  double recall() const {
    if (tp + fn == 0) return 1.0;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  double f1() const {
    const double p = precision(), r = recall();
    if (std::isnan(p) || p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
  }

  PointMetrics& operator+=(const PointMetrics& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

/// Scores the {NSSO, Dynamic} class; `predicted` lists foreground indices.
inline PointMetrics point_metrics(std::span<const std::uint32_t> predicted,
                                  std::span<const TruthLabel> truth) {
  std::vector<std::uint8_t> mask(truth.size(), 0);
  for (auto i : predicted) {
    if (i >= truth.size()) {
      throw InputError("point_metrics: predicted index " + std::to_string(i) +
                       " outside truth of length " + std::to_string(truth.size()));
    }
    mask[i] = 1;
  }
  PointMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = is_foreground(truth[i]);
    if (mask[i] && t) ++m.tp;
    else if (mask[i]) ++m.fp;
    else if (t) ++m.fn;
  }
  return m;
}

/// Mask form; lengths must agree.
inline PointMetrics point_metrics_mask(std::span<const std::uint8_t> predicted_mask,
                                       std::span<const TruthLabel> truth) {
  if (predicted_mask.size() != truth.size()) {
    throw InputError("point_metrics: prediction length " + std::to_string(predicted_mask.size()) +
                     " != truth length " + std::to_string(truth.size()));
  }
  std::vector<std::uint32_t> idx;
  for (std::uint32_t i = 0; i < predicted_mask.size(); ++i) {
    if (predicted_mask[i]) idx.push_back(i);
  }
  return point_metrics(idx, truth);
}

struct BoxMatch {
  std::size_t predicted = 0;
  std::size_t truth = 0;
  double iou = 0.0;
};

struct BoxMetrics {
  std::size_t n_predicted = 0;
  std::size_t n_truth = 0;
  std::size_t detected = 0;  // matches at or above the threshold
  double iou_sum = 0.0;      // over detected matches
  std::vector<BoxMatch> matches;

  double precision() const {
    if (n_predicted == 0) return n_truth == 0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(detected) / static_cast<double>(n_predicted);
  }
  double recall() const {
    if (n_truth == 0) return 1.0;
    return static_cast<double>(detected) / static_cast<double>(n_truth);
  }
  double mean_iou() const {
    if (detected == 0) {
      return n_truth == 0 && n_predicted == 0 ? 1.0 : 0.0;
    }
    return iou_sum / static_cast<double>(detected);
  }

  BoxMetrics& operator+=(const BoxMetrics& o) {
    n_predicted += o.n_predicted;
    n_truth += o.n_truth;
    detected += o.detected;
    iou_sum += o.iou_sum;
    return *this;
  }
};

/// Greedy one-to-one matching by descending IoU.
inline BoxMetrics box_metrics(std::span<const OrientedBox> predicted,
                              std::span<const OrientedBox> truth, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw DomainError("box_metrics: iou_threshold must be in (0,1]");
  }
  BoxMetrics m;
  m.n_predicted = predicted.size();
  m.n_truth = truth.size();
  std::vector<BoxMatch> pairs;
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double iou = box_iou(predicted[p], truth[t]);
      if (iou > 0.0) pairs.push_back({p, t, iou});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const BoxMatch& a, const BoxMatch& b) {
    return std::tie(b.iou, a.predicted, a.truth) < std::tie(a.iou, b.predicted, b.truth);
  });
  std::vector<bool> pu(predicted.size(), false), tu(truth.size(), false);
  for (const auto& c : pairs) {
    if (pu[c.predicted] || tu[c.truth]) continue;
    pu[c.predicted] = tu[c.truth] = true;
    m.matches.push_back(c);
    if (c.iou >= iou_threshold) {
      ++m.detected;
      m.iou_sum += c.iou;
    }
  }
  return m;
}

}  // namespace lidarprior::simgen

#endif  // LIDARPRIOR_SIMGEN_HPP
