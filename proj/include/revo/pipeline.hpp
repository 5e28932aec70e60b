// Full reconstruction pipeline: turntable detection until stable, one-time
// registration, then per frame merge -> radial accumulator -> particle filter
// step -> best profile. Frames are processed strictly in order.

#pragma once

#include <revo/accumulator.hpp>
#include <revo/core.hpp>
#include <revo/particle_filter.hpp>
#include <revo/registration.hpp>
#include <revo/spline.hpp>
#include <revo/turntable.hpp>

#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace revo {

struct SensorSetup {
  double phi = 0.0;  // axial registration angle, radians
  SensorIntrinsics intrinsics;
  bool projection_weights = true;  // weight center estimation by pixel footprint
};

struct PipelineParams {
  double radius = 160.0;
  double cell = 10.0;
  double h_max = 160.0;
  bool enhanced = true;
  bool temporal = true;  // false: reinitialize the particle set every frame
  PlaneFitConfig plane;
  StabilityConfig stability;
  FilterConfig filter;
  std::vector<SensorSetup> sensors;
  std::uint64_t seed = 1;
};

struct FrameOutput {
  ProfileCurve best;
  double best_score = 0.0;
  double mean_score = 0.0;
  bool reinitialized = false;
  RadialAccumulator accumulator;
};

/// Stateful driver. Feed frames (one cloud per sensor, fixed order) to
/// `feed_detection` until it reports completion, then run `process` over the
/// modeling frames. Batch callers usually restart from frame 0 for modeling.
class Pipeline {
 public:
  explicit Pipeline(PipelineParams params) : params_(std::move(params)) {
    if (params_.sensors.empty())
      throw std::invalid_argument("Pipeline: at least one sensor required");
    for (std::size_t i = 0; i < params_.sensors.size(); ++i) {
      const SensorSetup& s = params_.sensors[i];
      StabilityTracker::WeightFn weight;
      if (s.projection_weights) {
        const SensorIntrinsics intr = s.intrinsics;
        weight = [intr](const Point3& p, const Plane& plane) {
          return projection_weight(p, plane.normal, intr, Point3::Zero());
        };
      }
      trackers_.emplace_back(params_.plane, params_.stability, params_.radius,
                             mix_seed(params_.seed, 0xDE7EC7 + i), std::move(weight));
    }
    detections_.resize(params_.sensors.size());
  }

  std::size_t sensor_count() const { return params_.sensors.size(); }
  bool detection_complete() const { return detection_complete_; }

  const std::vector<DetectionResult>& detections() const {
    require_detected();
    return locked_;
  }
  const std::vector<RigidTransform>& registrations() const {
    require_detected();
    return registrations_;
  }

  /// Detection phase; returns true once every sensor's turntable is locked.
  bool feed_detection(const std::vector<PointCloud>& sensor_clouds) {
    check_arity(sensor_clouds);
    if (detection_complete_) return true;
    bool all = true;
    for (std::size_t i = 0; i < trackers_.size(); ++i) {
      if (!detections_[i]) {
        detections_[i] = trackers_[i].feed(sensor_clouds[i]);
      }
      all = all && detections_[i].has_value();
    }
    if (all) {
      for (std::size_t i = 0; i < detections_.size(); ++i) {
        locked_.push_back(*detections_[i]);
        registrations_.push_back(
            registration_transform(detections_[i]->model, params_.sensors[i].phi));
      }
      detection_complete_ = true;
    }
    return detection_complete_;
  }

  /// Modeling phase for one frame. The detected plane's inliers are removed
  /// from each sensor cloud so the accumulator sees the object, not the
  /// plate; the particle filter then advances one step.
  FrameOutput process(const std::vector<PointCloud>& sensor_clouds) {
    require_detected();
    check_arity(sensor_clouds);

    std::vector<PointCloud> object_clouds;
    object_clouds.reserve(sensor_clouds.size());
    for (std::size_t i = 0; i < sensor_clouds.size(); ++i) {
      PointCloud kept(sensor_clouds[i].frame_id);
      for (const Point3& p : sensor_clouds[i]) {
        if (locked_[i].plane.distance(p) > params_.plane.inlier_threshold) kept.push_back(p);
      }
      object_clouds.push_back(std::move(kept));
    }
    const PointCloud merged = merge_registered(object_clouds, registrations_);

    FrameOutput out{
        .best = {},
        .best_score = 0.0,
        .mean_score = 0.0,
        .reinitialized = false,
        .accumulator = build_accumulator(merged, params_.cell, params_.radius, params_.h_max,
                                         params_.enhanced),
    };

    if (params_.temporal) {
      if (!particles_) {
        particles_ = init_particles(params_.filter, params_.radius, params_.h_max,
                                    mix_seed(params_.seed, 0xF117E2));
      }
      ParticleSet scored = score_particles(
          motion_update(std::move(*particles_), params_.filter), out.accumulator, params_.filter);
      out.best = best_particle(scored);
      fill_scores(out, scored);
      particles_ = systematic_resample(std::move(scored), params_.filter,
                                       mix_seed(params_.seed, 0x5E5A + frame_index_));
      out.reinitialized = particles_->reinitialized;
    } else {
      // Per-frame reinitialization: a fresh population scored once.
      ParticleSet fresh = init_particles(params_.filter, params_.radius, params_.h_max,
                                         mix_seed(params_.seed, 0x171 + frame_index_));
      ParticleSet scored = score_particles(std::move(fresh), out.accumulator, params_.filter);
      out.best = best_particle(scored);
      fill_scores(out, scored);
    }
    ++frame_index_;
    return out;
  }

 private:
  static void fill_scores(FrameOutput& out, const ParticleSet& scored) {
    double best = 0.0, sum = 0.0;
    for (double s : scored.scores) {
      best = std::max(best, s);
      sum += s;
    }
    out.best_score = best;
    out.mean_score = sum / static_cast<double>(scored.size());
  }

  void check_arity(const std::vector<PointCloud>& clouds) const {
    if (clouds.size() != params_.sensors.size())
      throw std::invalid_argument("Pipeline: sensor cloud count mismatch");
  }

  void require_detected() const {
    if (!detection_complete_)
      throw InvalidStateError("Pipeline: turntable detection has not completed");
  }

  PipelineParams params_;
  std::vector<StabilityTracker> trackers_;
  std::vector<std::optional<DetectionResult>> detections_;
  std::vector<DetectionResult> locked_;
  std::vector<RigidTransform> registrations_;
  std::optional<ParticleSet> particles_;
  bool detection_complete_ = false;
  std::size_t frame_index_ = 0;
};

}  // namespace revo
