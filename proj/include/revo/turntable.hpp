// Turntable detection: robust plane estimation with mSAC (truncated quadratic
// cost) plus local-optimization / weighted-least-squares refinement, then
// plate-center localization with a projection-weighted MeanShift. Detection
// locks once consecutive frames agree within the stability gates.

#pragma once

#include <revo/core.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace revo {

struct TurntableModel {
  Point3 center = Point3::Zero();
  Point3 normal = Point3::UnitY();
  double radius = 0.0;  // known input, never estimated
};

/// Plane n.p + d = 0 with unit normal, so signed_distance is metric.
struct Plane {
  Point3 normal = Point3::UnitZ();
  double d = 0.0;

  double signed_distance(const Point3& p) const { return normal.dot(p) + d; }
  double distance(const Point3& p) const { return std::abs(signed_distance(p)); }
  Point3 project(const Point3& p) const { return p - signed_distance(p) * normal; }
};

struct PlaneFitConfig {
  double inlier_threshold = 5.0;      // mm
  int max_iterations = 500;
  double confidence = 0.99;           // probability of sampling an outlier-free triple
  double expected_inlier_ratio = 0.4; // seeds the stopping rule before any consensus
  bool refine_local = true;           // iterative re-estimation from inliers
  bool refine_wlst = true;            // final weighted least squares
};

struct SensorIntrinsics {
  double focal_length = 80.0;   // pixels
  double pixel_pitch = 1.0;
  Eigen::Vector2d principal_point = {80.0, 60.0};  // pixels
  int image_width = 160;
  int image_height = 120;
};

struct PlaneFitResult {
  Plane plane;
  std::vector<std::size_t> inliers;
  double cost = 0.0;   // total truncated-quadratic cost of the returned plane
  int iterations = 0;  // hypotheses actually drawn
};

namespace detail {

// Least-squares plane through the weighted centroid; normal is the smallest
// eigenvector of the weighted scatter. Returns nullopt for degenerate spans.
inline std::optional<Plane> fit_plane_lsq(const PointCloud& cloud,
                                          const std::vector<std::size_t>& idx,
                                          const std::vector<double>* weights = nullptr) {
  if (idx.size() < 3) return std::nullopt;
  Point3 centroid = Point3::Zero();
  double wsum = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double w = weights ? (*weights)[k] : 1.0;
    centroid += w * cloud[idx[k]];
    wsum += w;
  }
  if (wsum <= 0.0) return std::nullopt;
  centroid /= wsum;
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double w = weights ? (*weights)[k] : 1.0;
    const Point3 q = cloud[idx[k]] - centroid;
    scatter += w * q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  if (eig.info() != Eigen::Success) return std::nullopt;
  // eigenvalues ascending; collinear input leaves two near-zero directions
  const double lambda1 = eig.eigenvalues()(1);
  const double lambda2 = eig.eigenvalues()(2);
  if (lambda2 <= 0.0 || lambda1 <= 1e-10 * lambda2) return std::nullopt;
  Plane plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.d = -plane.normal.dot(centroid);
  return plane;
}

inline double msac_cost(const PointCloud& cloud, const Plane& plane, double threshold) {
  const double t2 = threshold * threshold;
  double cost = 0.0;
  for (const Point3& p : cloud) {
    const double d = plane.signed_distance(p);
    cost += std::min(d * d, t2);
  }
  return cost;
}

inline std::vector<std::size_t> plane_inliers(const PointCloud& cloud, const Plane& plane,
                                              double threshold) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (plane.distance(cloud[i]) <= threshold) idx.push_back(i);
  }
  return idx;
}

// Standard adaptive stopping rule for 3-point samples.
inline double stopping_iterations(double confidence, double inlier_ratio) {
  const double w3 = inlier_ratio * inlier_ratio * inlier_ratio;
  if (w3 >= 1.0 - 1e-12) return 1.0;
  if (w3 <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(1.0 - confidence) / std::log(1.0 - w3);
}

inline bool cloud_is_collinear(const PointCloud& cloud) {
  Point3 centroid = Point3::Zero();
  for (const Point3& p : cloud) centroid += p;
  centroid /= static_cast<double>(cloud.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const Point3& p : cloud) {
    const Point3 q = p - centroid;
    scatter += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  const double lambda1 = eig.eigenvalues()(1);
  const double lambda2 = eig.eigenvalues()(2);
  return lambda2 <= 0.0 || lambda1 <= 1e-10 * lambda2;
}

}  // namespace detail

/// Robust plane fit with truncated-quadratic (mSAC) scoring. Deterministic for
/// a given (cloud, config, seed); hypothesis ties resolve to the earliest
/// drawn. Refinement steps are only accepted when they do not increase the
/// mSAC cost.
inline PlaneFitResult fit_plane_msac(const PointCloud& cloud, const PlaneFitConfig& cfg,
                                     std::uint64_t rng_seed) {
  if (cloud.size() < 3) throw InsufficientDataError("fit_plane_msac: need at least 3 points");
  if (detail::cloud_is_collinear(cloud))
    throw DegenerateInputError("fit_plane_msac: points are collinear");

  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);

  Plane best;
  double best_cost = std::numeric_limits<double>::infinity();
  bool have_best = false;
  double inlier_ratio = std::clamp(cfg.expected_inlier_ratio, 0.0, 1.0);
  int iter = 0;

  while (iter < cfg.max_iterations) {
    if (have_best &&
        static_cast<double>(iter) >= detail::stopping_iterations(cfg.confidence, inlier_ratio))
      break;
    ++iter;

    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    std::size_t c = pick(rng);
    while (c == a || c == b) c = pick(rng);

    const Point3 u = cloud[b] - cloud[a];
    const Point3 v = cloud[c] - cloud[a];
    const Point3 n = u.cross(v);
    const double n_norm = n.norm();
    if (n_norm <= 1e-12 * std::max(1.0, u.norm() * v.norm())) continue;  // degenerate triple

    Plane hyp;
    hyp.normal = n / n_norm;
    hyp.d = -hyp.normal.dot(cloud[a]);
    const double cost = detail::msac_cost(cloud, hyp, cfg.inlier_threshold);
    if (cost < best_cost) {
      best = hyp;
      best_cost = cost;
      have_best = true;
      const auto inl = detail::plane_inliers(cloud, hyp, cfg.inlier_threshold);
      inlier_ratio = std::max(inlier_ratio,
                              static_cast<double>(inl.size()) / static_cast<double>(cloud.size()));
    }
  }
  if (!have_best)
    throw DegenerateInputError("fit_plane_msac: no valid hypothesis could be sampled");

  // Local optimization: re-estimate from inliers and re-threshold until the
  // inlier set reaches a fixpoint (at most 10 rounds).
  if (cfg.refine_local) {
    Plane current = best;
    auto inliers = detail::plane_inliers(cloud, current, cfg.inlier_threshold);
    for (int round = 0; round < 10; ++round) {
      const auto refit = detail::fit_plane_lsq(cloud, inliers);
      if (!refit) break;
      const auto next = detail::plane_inliers(cloud, *refit, cfg.inlier_threshold);
      current = *refit;
      if (next == inliers) {
        inliers = next;
        break;
      }
      inliers = next;
    }
    const double cost = detail::msac_cost(cloud, current, cfg.inlier_threshold);
    if (cost <= best_cost) {
      best = current;
      best_cost = cost;
    }
  }

  // Weighted least squares: one final fit with weights (1 - d^2/t^2) clamped
  // to [0, 1], taken from the current best plane.
  if (cfg.refine_wlst) {
    const double t2 = cfg.inlier_threshold * cfg.inlier_threshold;
    std::vector<std::size_t> idx;
    std::vector<double> w;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const double d = best.signed_distance(cloud[i]);
      const double wi = std::clamp(1.0 - d * d / t2, 0.0, 1.0);
      if (wi > 0.0) {
        idx.push_back(i);
        w.push_back(wi);
      }
    }
    if (const auto refit = detail::fit_plane_lsq(cloud, idx, &w)) {
      const double cost = detail::msac_cost(cloud, *refit, cfg.inlier_threshold);
      if (cost <= best_cost) {
        best = *refit;
        best_cost = cost;
      }
    }
  }

  PlaneFitResult result;
  result.plane = best;
  result.inliers = detail::plane_inliers(cloud, best, cfg.inlier_threshold);
  result.cost = best_cost;
  result.iterations = iter;
  return result;
}

/// Weight of a point for center estimation: the scene area imaged by its
/// pixel. Far points image more area per pixel and weigh more; grazing
/// incidence is clamped at cos(alpha) = 0.1.
inline double projection_weight(const Point3& p, const Point3& plane_normal,
                                const SensorIntrinsics& sensor, const Point3& sensor_origin) {
  const Point3 ray = p - sensor_origin;
  const double depth = ray.norm();
  if (depth <= 0.0)
    throw std::invalid_argument("projection_weight: point must be in front of the sensor");
  const double cos_alpha = std::abs(plane_normal.normalized().dot(ray / depth));
  const double zf = depth / sensor.focal_length;
  return zf * zf * sensor.pixel_pitch * sensor.pixel_pitch / std::max(cos_alpha, 0.1);
}

/// MeanShift mode seeking with a flat kernel of the given bandwidth, started
/// from a uniformly random inlier. Converged when the shift drops below
/// convergence_eps (3 mm by default in callers). If a plane is supplied the
/// result is projected onto it.
inline Point3 meanshift_center(const PointCloud& inliers, std::span<const double> weights,
                               double kernel_bandwidth, double convergence_eps,
                               std::uint64_t rng_seed,
                               const std::optional<Plane>& plane = std::nullopt) {
  if (inliers.empty()) throw InsufficientDataError("meanshift_center: no inliers");
  if (weights.size() != inliers.size())
    throw std::invalid_argument("meanshift_center: weights/points size mismatch");
  if (kernel_bandwidth <= 0.0)
    throw std::invalid_argument("meanshift_center: bandwidth must be positive");

  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, inliers.size() - 1);
  const double bw2 = kernel_bandwidth * kernel_bandwidth;

  // Initial start plus up to 10 restarts when the window carries no mass.
  for (int attempt = 0; attempt < 11; ++attempt) {
    Point3 x = inliers[pick(rng)];
    bool dead = false;
    for (int it = 0; it < 200; ++it) {
      Point3 num = Point3::Zero();
      double den = 0.0;
      for (std::size_t i = 0; i < inliers.size(); ++i) {
        if ((inliers[i] - x).squaredNorm() <= bw2) {
          num += weights[i] * inliers[i];
          den += weights[i];
        }
      }
      if (den <= 0.0) {
        dead = true;  // kernel window carries no mass, restart elsewhere
        break;
      }
      const Point3 next = num / den;
      const double shift = (next - x).norm();
      x = next;
      if (shift < convergence_eps) {
        return plane ? plane->project(x) : x;
      }
    }
    if (!dead) {
      // Iteration cap reached; the current estimate is the mode.
      return plane ? plane->project(x) : x;
    }
  }
  throw NoConvergenceError("meanshift_center: no mass under the kernel after 10 restarts");
}

struct StabilityConfig {
  double max_normal_angle_deg = 2.0;  // gate on the normal direction
  double max_center_shift = 5.0;      // sigma_c gate on the center, mm
  double meanshift_eps = 3.0;         // mm
  // 0 = twice the table radius. With a flat kernel the window must cover the
  // whole plate from any start point, otherwise the iteration stalls a few
  // multiples of meanshift_eps away from the center.
  double kernel_bandwidth = 0.0;
};

struct DetectionResult {
  TurntableModel model;
  Plane plane;
  std::size_t frames_used = 0;
};

/// Per-frame turntable estimation with a stability lock: detection completes
/// on the first pair of consecutive frames whose normals and centers agree
/// within the gates. Normals are oriented toward the sensor origin (the
/// clouds' frame origin, with n.p + d = 0 that means d > 0) so consecutive
/// frames are comparable. `point_weight`, when given, supplies the per-point
/// center weights (projection weights).
class StabilityTracker {
 public:
  using WeightFn = std::function<double(const Point3&, const Plane&)>;

  StabilityTracker(const PlaneFitConfig& cfg, const StabilityConfig& stab, double known_radius,
                   std::uint64_t rng_seed, WeightFn point_weight = {})
      : cfg_(cfg), stab_(stab), radius_(known_radius), seed_(rng_seed),
        weight_(std::move(point_weight)) {
    if (known_radius <= 0.0)
      throw std::invalid_argument("StabilityTracker: radius must be positive");
  }

  /// Feed the next frame; returns the detection once it locks.
  std::optional<DetectionResult> feed(const PointCloud& frame) {
    PlaneFitResult fit = fit_plane_msac(frame, cfg_, mix_seed(seed_, 2 * frames_seen_));
    if (fit.plane.d < 0.0) {
      fit.plane.normal = -fit.plane.normal;
      fit.plane.d = -fit.plane.d;
    }

    PointCloud inlier_cloud(frame.frame_id);
    inlier_cloud.reserve(fit.inliers.size());
    std::vector<double> weights;
    weights.reserve(fit.inliers.size());
    for (std::size_t i : fit.inliers) {
      inlier_cloud.push_back(frame[i]);
      weights.push_back(weight_ ? weight_(frame[i], fit.plane) : 1.0);
    }
    const double bandwidth =
        stab_.kernel_bandwidth > 0.0 ? stab_.kernel_bandwidth : 2.0 * radius_;
    const Point3 center =
        meanshift_center(inlier_cloud, weights, bandwidth, stab_.meanshift_eps,
                         mix_seed(seed_, 2 * frames_seen_ + 1), fit.plane);
    ++frames_seen_;

    TurntableModel model{center, fit.plane.normal, radius_};
    std::optional<DetectionResult> result;
    if (previous_) {
      const double max_angle = stab_.max_normal_angle_deg * std::numbers::pi_v<double> / 180.0;
      const double cosang = std::clamp(model.normal.dot(previous_->normal), -1.0, 1.0);
      if (std::acos(cosang) <= max_angle &&
          (model.center - previous_->center).norm() <= stab_.max_center_shift) {
        result = DetectionResult{model, fit.plane, frames_seen_};
      }
    }
    previous_ = model;
    return result;
  }

 private:
  PlaneFitConfig cfg_;
  StabilityConfig stab_;
  double radius_;
  std::uint64_t seed_;
  WeightFn weight_;
  std::size_t frames_seen_ = 0;
  std::optional<TurntableModel> previous_;
};

/// Batch form over a frame stream; throws when the stream is exhausted before
/// two consecutive frames agree.
inline DetectionResult detect_turntable_stable(
    std::span<const PointCloud> frames, const PlaneFitConfig& cfg, const StabilityConfig& stab,
    double known_radius, std::uint64_t rng_seed,
    const StabilityTracker::WeightFn& point_weight = {}) {
  StabilityTracker tracker(cfg, stab, known_radius, rng_seed, point_weight);
  for (const PointCloud& frame : frames) {
    if (auto result = tracker.feed(frame)) return *result;
  }
  throw DetectionFailedError("detect_turntable_stable: stream ended before stability");
}

}  // namespace revo
