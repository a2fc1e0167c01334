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

#ifndef LIDARPRIOR_CASCADE_HPP
#define LIDARPRIOR_CASCADE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "lidarprior/box.hpp"
#include "lidarprior/clustering.hpp"
#include "lidarprior/core.hpp"
#include "lidarprior/error.hpp"
#include "lidarprior/priormap.hpp"
#include "lidarprior/text.hpp"

namespace lidarprior::cascade {

enum class StageKind { kGroundPlane, kPlanarBox, kVolumetricBox };

inline std::string_view stage_kind_name(StageKind k) {
  switch (k) {
    case StageKind::kGroundPlane: return "ground";
    case StageKind::kPlanarBox: return "planar";
    case StageKind::kVolumetricBox: return "volumetric";
  }
  return "?";
}

/// One background test. `model_id` is a plane index for ground stages and a
/// box source id for box stages.
struct CascadeStage {
  StageKind kind = StageKind::kGroundPlane;
  std::int64_t model_id = 0;
  double margin = 0.0;
  std::optional<double> measured_cost;       // cost per point
  std::optional<double> measured_rejection;  // fraction in [0,1]
  std::size_t stable_id = 0;                 // tie-break, position in default order

  void validate() const {
    if (!(margin >= 0.0)) throw DomainError("cascade stage: margin must be >= 0");
    if (measured_rejection && !(*measured_rejection >= 0.0 && *measured_rejection <= 1.0)) {
      throw DomainError("cascade stage: measured rejection outside [0,1]");
    }
    if (measured_cost && !(*measured_cost > 0.0)) {
      throw DomainError("cascade stage: measured cost must be > 0");
    }
  }

  bool operator==(const CascadeStage&) const = default;
};

struct RejectionCascade {
  std::vector<CascadeStage> stages;

  void validate() const {
    std::set<std::pair<StageKind, std::int64_t>> seen;
    for (const auto& s : stages) {
      s.validate();
      if (!seen.insert({s.kind, s.model_id}).second) {
        throw DomainError("cascade: model " + std::string(stage_kind_name(s.kind)) + ":" +
                          std::to_string(s.model_id) + " referenced twice");
      }
    }
  }
};

/// How a track's motion over the window is measured.
enum class MotionStatistic {
  kFittedTrack,   // end-to-end displacement of a least-squares line through the positions
  kMaxPairwise,   // largest distance between any two positions
};

struct CascadeParams {
  double margin_ground = 0.3;
  double margin_box = 0.2;
  // Foreground clustering of survivors.
  double eps = 0.7;
  std::size_t min_pts = 5;
  std::size_t min_cluster_points = 10;
  double cluster_max_range = 30.0;  // on the cluster centroid
  double range_slack = 10.0;        // extra point range so edge objects stay whole
  // Survivor classification and tracking.
  std::size_t window = 10;
  double motion_threshold = 0.3;
  double association_gate = 2.0;
  std::size_t max_missed = 2;
  MotionStatistic motion_statistic = MotionStatistic::kFittedTrack;

  void validate() const {
    auto require = [](bool ok, const char* field) {
      if (!ok) throw InputError(std::string("cascade config: invalid value for ") + field);
    };
    require(margin_ground >= 0.0, "margin_ground");
    require(margin_box >= 0.0, "margin_box");
    require(eps > 0.0, "eps");
    require(min_pts >= 1, "min_pts");
    require(cluster_max_range > 0.0, "cluster_max_range");
    require(range_slack >= 0.0, "range_slack");
    require(window >= 1, "window");
    require(motion_threshold > 0.0, "motion_threshold");
    require(association_gate > 0.0, "association_gate");
  }

  void apply(const text::ConfigFile& cfg) {
    for (const auto& sec : cfg.sections) {
      if (sec.kind != "cascade") continue;
      for (const auto& [key, value] : sec.entries) set(key, value);
    }
  }

  void set(std::string_view key, const std::string& value) {
    const std::string what = "cascade." + std::string(key);
    auto d = [&] { return text::parse_double(value, what); };
    auto u = [&] {
      const auto v = text::parse_int(value, what);
      if (v < 0) throw InputError(what + ": must be non-negative");
      return static_cast<std::size_t>(v);
    };
    if (key == "margin_ground") margin_ground = d();
    else if (key == "margin_box") margin_box = d();
    else if (key == "eps") eps = d();
    else if (key == "min_pts") min_pts = u();
    else if (key == "min_cluster_points") min_cluster_points = u();
    else if (key == "cluster_max_range") cluster_max_range = d();
    else if (key == "range_slack") range_slack = d();
    else if (key == "motion_statistic") {
      if (value == "fitted") motion_statistic = MotionStatistic::kFittedTrack;
      else if (value == "max_pairwise") motion_statistic = MotionStatistic::kMaxPairwise;
      else throw ParseError(what + ": expected fitted or max_pairwise");
    }
    else if (key == "window") window = u();
    else if (key == "motion_threshold") motion_threshold = d();
    else if (key == "association_gate") association_gate = d();
    else if (key == "max_missed") max_missed = u();
    else throw InputError("unknown config key " + what);
  }
};

/// Ground, then planar boxes, then volumetric boxes, each in map order.
inline RejectionCascade default_cascade(const PriorMap& map, const CascadeParams& params) {
  RejectionCascade c;
  std::size_t id = 0;
  for (std::size_t i = 0; i < map.ground_planes.size(); ++i) {
    c.stages.push_back({StageKind::kGroundPlane, static_cast<std::int64_t>(i),
                        params.margin_ground, {}, {}, id++});
  }
  for (const auto& b : map.planar_boxes) {
    c.stages.push_back({StageKind::kPlanarBox, b.source_id, params.margin_box, {}, {}, id++});
  }
  for (const auto& b : map.volumetric_boxes) {
    c.stages.push_back({StageKind::kVolumetricBox, b.source_id, params.margin_box, {}, {}, id++});
  }
  return c;
}

/// Stage bound to its map model, with the rotation and an axis-aligned
/// bound precomputed.
class StageTester {
 public:
  StageTester(const CascadeStage& stage, const PriorMap& map) : kind_(stage.kind) {
    if (stage.kind == StageKind::kGroundPlane) {
      if (stage.model_id < 0 ||
          static_cast<std::size_t>(stage.model_id) >= map.ground_planes.size()) {
        throw DomainError("cascade: dangling ground plane reference " +
                          std::to_string(stage.model_id));
      }
      const auto& p = map.ground_planes[static_cast<std::size_t>(stage.model_id)];
      normal_ = p.normal;
      offset_ = p.offset;
      margin_ = stage.margin;
      return;
    }
    const MapBox* mb = stage.kind == StageKind::kPlanarBox
                           ? map.find_planar(static_cast<clustering::ClusterId>(stage.model_id))
                           : map.find_volumetric(static_cast<clustering::ClusterId>(stage.model_id));
    if (!mb) {
      throw DomainError("cascade: dangling " + std::string(stage_kind_name(stage.kind)) +
                        " box reference " + std::to_string(stage.model_id));
    }
    const auto& b = mb->box;
    center_ = b.center;
    c_ = std::cos(b.yaw);
    s_ = std::sin(b.yaw);
    half_ = b.half_extents + Eigen::Vector3d::Constant(b.margin + stage.margin);
    const double rx = std::abs(c_) * half_.x() + std::abs(s_) * half_.y();
    const double ry = std::abs(s_) * half_.x() + std::abs(c_) * half_.y();
    lo_ = center_ - Eigen::Vector3d(rx, ry, half_.z());
    hi_ = center_ + Eigen::Vector3d(rx, ry, half_.z());
  }

  bool rejects(const Point3& p) const {
    if (kind_ == StageKind::kGroundPlane) {
      return std::abs(normal_.dot(p) + offset_) <= margin_;
    }
    if (p.x() < lo_.x() || p.x() > hi_.x() || p.y() < lo_.y() || p.y() > hi_.y() ||
        p.z() < lo_.z() || p.z() > hi_.z()) {
      return false;
    }
    const double dx = p.x() - center_.x();
    const double dy = p.y() - center_.y();
    const double u = c_ * dx + s_ * dy;
    const double v = -s_ * dx + c_ * dy;
    return std::abs(u) <= half_.x() && std::abs(v) <= half_.y();
  }

 private:
  StageKind kind_;
  Point3 normal_ = Point3::UnitZ();
  double offset_ = 0.0;
  double margin_ = 0.0;
  Point3 center_ = Point3::Zero();
  double c_ = 1.0, s_ = 0.0;
  Eigen::Vector3d half_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d lo_ = Eigen::Vector3d::Zero(), hi_ = Eigen::Vector3d::Zero();
};

struct StagePartition {
  std::vector<std::uint32_t> rejected;
  std::vector<std::uint32_t> survivors;
};

inline StagePartition apply_stage(std::span<const Point3> points, const CascadeStage& stage,
                                  const PriorMap& map) {
  stage.validate();
  const StageTester t(stage, map);
  StagePartition out;
  for (std::uint32_t i = 0; i < points.size(); ++i) {
    (t.rejects(points[i]) ? out.rejected : out.survivors).push_back(i);
  }
  return out;
}

/**
 * Sorts by rejection per unit cost, descending; ties go to the cheaper
 * stage, then to the lower stable id. Stages lacking statistics follow the
 * measured ones in the default kind order.
 */
inline RejectionCascade order_stages(std::vector<CascadeStage> stages) {
  auto measured = [](const CascadeStage& s) {
    return s.measured_cost.has_value() && s.measured_rejection.has_value();
  };
  std::stable_sort(stages.begin(), stages.end(),
                   [&](const CascadeStage& a, const CascadeStage& b) {
                     const bool ma = measured(a), mb = measured(b);
                     if (ma != mb) return ma;
                     if (ma) {
                       const double ra = *a.measured_rejection / *a.measured_cost;
                       const double rb = *b.measured_rejection / *b.measured_cost;
                       if (ra != rb) return ra > rb;
                       if (*a.measured_cost != *b.measured_cost) {
                         return *a.measured_cost < *b.measured_cost;
                       }
                       return a.stable_id < b.stable_id;
                     }
                     return std::tie(a.kind, a.stable_id) < std::tie(b.kind, b.stable_id);
                   });
  return RejectionCascade{std::move(stages)};
}

enum class CostModel { kAnalytic, kMeasured };

// Nominal per-point costs for the analytic model, in units of one plane test.
inline constexpr double kPlaneTestCost = 1.0;
inline constexpr double kBoxTestCost = 2.5;

/**
 * Fills measured_rejection (fraction of calibration points each stage would
 * reject on its own) and measured_cost. The analytic model is deterministic;
 * the measured one times each stage with a steady clock.
 */
inline std::vector<CascadeStage> calibrate_stages(std::vector<CascadeStage> stages,
                                                  const PriorMap& map,
                                                  std::span<const Point3> calibration_points,
                                                  CostModel model = CostModel::kAnalytic) {
  if (calibration_points.empty()) return stages;
  const double n = static_cast<double>(calibration_points.size());
  for (auto& s : stages) {
    const StageTester t(s, map);
    const auto start = std::chrono::steady_clock::now();
    std::size_t rejected = 0;
    for (const auto& p : calibration_points) rejected += t.rejects(p) ? 1 : 0;
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    s.measured_rejection = static_cast<double>(rejected) / n;
    if (model == CostModel::kMeasured) {
      s.measured_cost = std::max(elapsed.count() / n, 1e-12);
    } else {
      s.measured_cost = s.kind == StageKind::kGroundPlane ? kPlaneTestCost : kBoxTestCost;
    }
  }
  return stages;
}

// ---------------------------------------------------------------------------
// Foreground extraction
// ---------------------------------------------------------------------------

enum class ClusterLabel { kUnknown, kNsso, kDynamic };

inline std::string_view cluster_label_name(ClusterLabel l) {
  switch (l) {
    case ClusterLabel::kUnknown: return "unknown";
    case ClusterLabel::kNsso: return "nsso";
    case ClusterLabel::kDynamic: return "dynamic";
  }
  return "?";
}

/// Per-point foreground label as exported in result PLYs.
enum class PointLabel : int {
  kBackground = 0,  // rejected by a stage
  kUnclustered = 1,  // survivor outside any foreground cluster
  kUnknown = 2,
  kNsso = 3,
  kDynamic = 4,
};

inline PointLabel point_label(ClusterLabel l) {
  switch (l) {
    case ClusterLabel::kUnknown: return PointLabel::kUnknown;
    case ClusterLabel::kNsso: return PointLabel::kNsso;
    case ClusterLabel::kDynamic: return PointLabel::kDynamic;
  }
  return PointLabel::kUnknown;
}

struct ForegroundCluster {
  std::vector<std::uint32_t> indices;  // into the input frame
  Point3 centroid = Point3::Zero();
  OrientedBox box;
  ClusterLabel label = ClusterLabel::kUnknown;
  std::int64_t track_id = -1;
};

struct ForegroundResult {
  std::uint64_t frame_id = 0;
  std::size_t input_size = 0;
  std::vector<std::uint32_t> survivors;  // sorted
  std::vector<std::size_t> stage_rejected;  // per stage, cascade order
  std::vector<std::int32_t> point_stage;  // cascade position of the rejecting stage, or -1
  std::vector<ForegroundCluster> clusters;
  std::size_t out_of_range = 0;  // survivors beyond the clustering range

  std::size_t rejected_total() const { return input_size - survivors.size(); }

  std::vector<PointLabel> point_labels() const {
    std::vector<PointLabel> out(input_size, PointLabel::kBackground);
    for (auto i : survivors) out[i] = PointLabel::kUnclustered;
    for (const auto& c : clusters) {
      for (auto i : c.indices) out[i] = point_label(c.label);
    }
    return out;
  }

  std::size_t count(ClusterLabel l) const {
    return static_cast<std::size_t>(std::count_if(
        clusters.begin(), clusters.end(), [&](const ForegroundCluster& c) { return c.label == l; }));
  }
};

/**
 * Stateless driving-stage pass over one sensor-frame scan. Clusters come
 * back labeled Unknown; Detector attaches track-based labels.
 */
inline ForegroundResult run_cascade(const PointCloud& frame, const Pose& pose,
                                    const PriorMap& map, const RejectionCascade& cascade,
                                    const CascadeParams& params) {
  params.validate();
  ForegroundResult res;
  res.frame_id = frame.frame_id;
  res.input_size = frame.size();
  res.point_stage.assign(frame.size(), -1);
  res.stage_rejected.assign(cascade.stages.size(), 0);

  const Eigen::Matrix3d R = pose.rotation();
  std::vector<Point3> global(frame.size());
  std::vector<std::uint32_t> alive;
  alive.reserve(frame.size());
  for (std::uint32_t i = 0; i < frame.size(); ++i) {
    global[i] = R * frame.points[i] + pose.translation;
    alive.push_back(i);
  }

  std::vector<std::uint32_t> next;
  next.reserve(alive.size());
  for (std::size_t s = 0; s < cascade.stages.size(); ++s) {
    cascade.stages[s].validate();
    const StageTester t(cascade.stages[s], map);
    next.clear();
    for (auto i : alive) {
      if (t.rejects(global[i])) {
        res.point_stage[i] = static_cast<std::int32_t>(s);
      } else {
        next.push_back(i);
      }
    }
    res.stage_rejected[s] = alive.size() - next.size();
    alive.swap(next);
  }
  res.survivors = alive;

  std::vector<std::uint32_t> in_range;
  std::vector<Point3> pts;
  const double point_range = params.cluster_max_range + params.range_slack;
  for (auto i : alive) {
    if (frame.points[i].norm() <= point_range && is_finite(global[i])) {
      in_range.push_back(i);
      pts.push_back(global[i]);
    }
  }
  res.out_of_range = alive.size() - in_range.size();

  const auto db = clustering::dbscan_full(pts, params.eps, params.min_pts);
  const auto groups =
      clustering::group_by_label(db.labels, static_cast<std::size_t>(db.n_clusters));
  for (const auto& g : groups) {
    if (g.size() < std::max<std::size_t>(params.min_cluster_points, 3)) continue;
    ForegroundCluster fc;
    std::vector<Point3> members;
    members.reserve(g.size());
    Point3 sensor_centroid = Point3::Zero();
    for (auto k : g) {
      fc.indices.push_back(in_range[k]);
      members.push_back(pts[k]);
      fc.centroid += pts[k];
      sensor_centroid += frame.points[in_range[k]];
    }
    fc.centroid /= static_cast<double>(g.size());
    if ((sensor_centroid / static_cast<double>(g.size())).norm() > params.cluster_max_range) {
      res.out_of_range += g.size();
      continue;
    }
    std::sort(fc.indices.begin(), fc.indices.end());
    fc.box = fit_edge_fitted_box(members);
    res.clusters.push_back(std::move(fc));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Survivor classification
// ---------------------------------------------------------------------------

/// `position` is the cluster's fitted box centre, steadier than the point
/// centroid when the visible faces change.
struct TrackObservation {
  std::uint64_t frame_id = 0;
  Point3 position = Point3::Zero();
};

/// Last `capacity` observations per track id, ordered by frame.
struct TrackWindow {
  std::size_t capacity = 10;
  std::map<std::int64_t, std::deque<TrackObservation>> tracks;

  void add(std::int64_t id, const TrackObservation& obs) {
    auto& q = tracks[id];
    if (!q.empty() && q.back().frame_id >= obs.frame_id) {
      throw DomainError("track window: observations must arrive in frame order");
    }
    q.push_back(obs);
    while (q.size() > capacity) q.pop_front();
  }

  void erase(std::int64_t id) { tracks.erase(id); }
};

inline double max_pairwise_displacement(const std::deque<TrackObservation>& obs) {
  double best = 0.0;
  for (std::size_t a = 0; a < obs.size(); ++a) {
    for (std::size_t b = a + 1; b < obs.size(); ++b) {
      best = std::max(best, (obs[a].position - obs[b].position).norm());
    }
  }
  return best;
}

/// Fits p(f) = p0 + v f by least squares over frame ids and returns
/// |v| (f_last - f_first). Per-frame jitter averages out.
inline double fitted_displacement(const std::deque<TrackObservation>& obs) {
  if (obs.size() < 2) return 0.0;
  double fm = 0.0;
  Point3 pm = Point3::Zero();
  for (const auto& o : obs) {
    fm += static_cast<double>(o.frame_id);
    pm += o.position;
  }
  fm /= static_cast<double>(obs.size());
  pm /= static_cast<double>(obs.size());
  double den = 0.0;
  Point3 num = Point3::Zero();
  for (const auto& o : obs) {
    const double df = static_cast<double>(o.frame_id) - fm;
    den += df * df;
    num += df * (o.position - pm);
  }
  if (den <= 0.0) return 0.0;
  const double span = static_cast<double>(obs.back().frame_id - obs.front().frame_id);
  return (num / den).norm() * span;
}

inline double track_displacement(const std::deque<TrackObservation>& obs, MotionStatistic stat) {
  return stat == MotionStatistic::kFittedTrack ? fitted_displacement(obs)
                                               : max_pairwise_displacement(obs);
}

/// Under-observed tracks are Unknown; the rest are NSSO when their motion
/// over the window stays below the threshold, otherwise Dynamic.
inline std::map<std::int64_t, ClusterLabel> classify_survivors(
    const TrackWindow& window, std::size_t min_window, double motion_threshold,
    MotionStatistic stat = MotionStatistic::kFittedTrack) {
  if (!(motion_threshold > 0.0)) throw DomainError("classify_survivors: motion_threshold <= 0");
  std::map<std::int64_t, ClusterLabel> out;
  for (const auto& [id, obs] : window.tracks) {
    if (obs.size() < min_window) {
      out[id] = ClusterLabel::kUnknown;
    } else if (track_displacement(obs, stat) < motion_threshold) {
      out[id] = ClusterLabel::kNsso;
    } else {
      out[id] = ClusterLabel::kDynamic;
    }
  }
  return out;
}

/// Map volumetric box left without point support while in sensor range.
struct VacatedMapRegion {
  clustering::ClusterId source_id = 0;
  std::size_t frames_unsupported = 0;

  bool operator==(const VacatedMapRegion&) const = default;
};

/**
 * Streaming driver: runs the cascade per frame, associates clusters with
 * tracks by greedy nearest predicted box centre, and labels them from the
 * track window.
 */
class Detector {
 public:
  Detector(const PriorMap& map, RejectionCascade cascade, CascadeParams params)
      : map_(map), cascade_(std::move(cascade)), params_(params) {
    params_.validate();
    cascade_.validate();
    for (const auto& s : cascade_.stages) StageTester(s, map_);  // resolves every reference
    window_.capacity = params_.window;
  }

  const RejectionCascade& cascade() const { return cascade_; }
  const TrackWindow& window() const { return window_; }
  const std::vector<VacatedMapRegion>& vacated() const { return vacated_; }

  ForegroundResult process(const PointCloud& frame, const Pose& pose) {
    auto res = run_cascade(frame, pose, map_, cascade_, params_);
    observe(res, pose);
    return res;
  }

  /// Sequential half of process(): tracks and labels a run_cascade result.
  /// Results must arrive in frame order.
  void observe(ForegroundResult& res, const Pose& pose) {
    associate(res);
    const auto labels = classify_survivors(window_, params_.window, params_.motion_threshold,
                                           params_.motion_statistic);
    for (auto& c : res.clusters) c.label = labels.at(c.track_id);
    update_vacated(res, pose);
  }

 private:
  struct TrackState {
    Point3 last = Point3::Zero();
    Point3 velocity = Point3::Zero();  // per frame
    std::uint64_t last_frame = 0;
    std::size_t hits = 0;
  };

  void associate(ForegroundResult& res) {
    const std::uint64_t f = res.frame_id;
    struct Candidate {
      double d;
      std::int64_t track;
      std::size_t cluster;
    };
    std::vector<Candidate> cand;
    for (const auto& [id, st] : tracks_) {
      const double gap = static_cast<double>(f - st.last_frame);
      const Point3 predicted = st.last + st.velocity * gap;
      for (std::size_t c = 0; c < res.clusters.size(); ++c) {
        const double d = (res.clusters[c].box.center - predicted).head<2>().norm();
        if (d <= params_.association_gate) cand.push_back({d, id, c});
      }
    }
    std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.d, a.track, a.cluster) < std::tie(b.d, b.track, b.cluster);
    });
    std::set<std::int64_t> used_tracks;
    std::vector<bool> used_clusters(res.clusters.size(), false);
    for (const auto& c : cand) {
      if (used_tracks.count(c.track) || used_clusters[c.cluster]) continue;
      used_tracks.insert(c.track);
      used_clusters[c.cluster] = true;
      res.clusters[c.cluster].track_id = c.track;
    }
    for (std::size_t c = 0; c < res.clusters.size(); ++c) {
      if (!used_clusters[c]) res.clusters[c].track_id = next_track_++;
    }
    for (const auto& cl : res.clusters) {
      auto [it, fresh] = tracks_.try_emplace(cl.track_id);
      auto& st = it->second;
      if (!fresh && f > st.last_frame) {
        st.velocity = (cl.box.center - st.last) / static_cast<double>(f - st.last_frame);
      }
      st.last = cl.box.center;
      st.last_frame = f;
      ++st.hits;
      window_.add(cl.track_id, {f, cl.box.center});
    }
    for (auto it = tracks_.begin(); it != tracks_.end();) {
      if (f - it->second.last_frame > params_.max_missed) {
        window_.erase(it->first);
        it = tracks_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void update_vacated(const ForegroundResult& res, const Pose& pose) {
    for (std::size_t s = 0; s < cascade_.stages.size(); ++s) {
      const auto& st = cascade_.stages[s];
      if (st.kind != StageKind::kVolumetricBox) continue;
      const auto* mb = map_.find_volumetric(static_cast<clustering::ClusterId>(st.model_id));
      const double range = (mb->box.center - pose.translation).head<2>().norm();
      if (range > params_.cluster_max_range) continue;
      auto& n = unsupported_[mb->source_id];
      n = res.stage_rejected[s] == 0 ? n + 1 : 0;
    }
    vacated_.clear();
    for (const auto& [id, n] : unsupported_) {
      if (n >= params_.window) vacated_.push_back({id, n});
    }
  }

  const PriorMap& map_;
  RejectionCascade cascade_;
  CascadeParams params_;
  TrackWindow window_;
  std::map<std::int64_t, TrackState> tracks_;
  std::int64_t next_track_ = 0;
  std::map<clustering::ClusterId, std::size_t> unsupported_;
  std::vector<VacatedMapRegion> vacated_;
};

}  // namespace lidarprior::cascade

#endif  // LIDARPRIOR_CASCADE_HPP
