// Synthetic multi-sensor pottery scenes with known ground truth: a revolved
// profile over a turntable disk, per-sensor angular visibility sectors,
// depth-ray Gaussian noise, uniform outliers and hand-like occluder blobs
// that both block an angular arc of the surface and inject clutter.
//
// Each generated cloud is expressed in its sensor's own frame, so a consumer
// has to run the full detection + registration chain to reassemble the scene.

#pragma once

#include <revo/core.hpp>
#include <revo/registration.hpp>
#include <revo/spline.hpp>
#include <revo/turntable.hpp>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace revo {

struct SensorSpec {
  double azimuth_deg = 0.0;    // position around the table
  double elevation_deg = 45.0; // above the table plane
  double distance = 600.0;     // to the table center, mm
  double sector_deg = 360.0;   // visible arc of the object, centered on azimuth
  double noise_sigma = 0.0;    // depth noise along the viewing ray, mm
  int object_points = 4000;
  int table_points = 2000;
  SensorIntrinsics intrinsics;
};

struct OccluderSpec {
  double theta_deg = 0.0;      // arc center at frame 0
  double arc_deg = 0.0;        // blocked arc of object surface
  double anchor_frac = 0.5;    // anchor position along the profile, by arc length
  double radius = 30.0;        // blob radius, mm
  int points = 0;              // blob samples per facing sensor per frame
  double orbit_deg_per_frame = 0.0;  // hand travelling around the pot

  double theta_at(int frame) const { return theta_deg + orbit_deg_per_frame * frame; }
};

struct Keyframe {
  int frame = 0;
  Knot2 k2, k3, k4;
};

struct SceneSpec {
  ProfileCurve profile;        // ground truth (frame 0 when animated)
  double table_radius = 160.0;
  double h_max = 160.0;
  std::vector<SensorSpec> sensors;
  std::vector<OccluderSpec> occluders;
  double outlier_fraction = 0.0;  // of each sensor's object budget
  int frame_count = 1;
  std::vector<Keyframe> animation;  // empty = static profile
};

struct GeneratedFrame {
  std::vector<PointCloud> sensor_clouds;  // one per sensor, in sensor frames
  ProfileCurve ground_truth;
};

namespace detail {

inline double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

// Smallest absolute angular difference.
inline double angle_diff(double a, double b) {
  double d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

}  // namespace detail

/// Sensor position in the canonical frame.
inline Point3 sensor_position(const SensorSpec& s) {
  const double az = s.azimuth_deg * std::numbers::pi_v<double> / 180.0;
  const double el = s.elevation_deg * std::numbers::pi_v<double> / 180.0;
  PolarPoint q;
  q.rho = s.distance * std::cos(el);
  q.h = s.distance * std::sin(el);
  q.theta = az;
  return from_canonical_polar(q);
}

/// Rigid transform from the canonical frame into the sensor frame: the sensor
/// sits at the origin of its own frame looking down +z at the table center.
inline RigidTransform sensor_view(const SensorSpec& s) {
  const Point3 pos = sensor_position(s);
  const Point3 z_cam = (-pos).normalized();
  Point3 up = canonical_axis();
  if (std::abs(up.dot(z_cam)) > 0.99) up = Point3::UnitX();
  const Point3 x_cam = up.cross(z_cam).normalized();
  const Point3 y_cam = z_cam.cross(x_cam);
  Eigen::Matrix3d sensor_to_canonical;
  sensor_to_canonical.col(0) = x_cam;
  sensor_to_canonical.col(1) = y_cam;
  sensor_to_canonical.col(2) = z_cam;
  const Eigen::Matrix3d r = sensor_to_canonical.transpose();
  return {r, -(r * pos)};
}

/// Axial registration angle phi for this sensor: the residual rotation about
/// the revolution axis left over after the canonical alignment of the
/// sensor-frame turntable, negated so the configured axial rotation cancels
/// it exactly.
inline double sensor_phi(const SceneSpec& spec, std::size_t sensor_index) {
  const SensorSpec& s = spec.sensors.at(sensor_index);
  const RigidTransform view = sensor_view(s);
  TurntableModel table;
  table.center = view(canonical_center());
  table.normal = view.R * canonical_axis();
  table.radius = spec.table_radius;
  const RigidTransform residual = align_to_canonical(table) * view;
  const Point3 image = residual.R * Point3::UnitX();
  const auto [e1, e2] = polar_basis(canonical_axis());
  return -std::atan2(image.dot(e2), image.dot(e1));
}

/// Ground-truth profile at a frame, following the keyframe schedule with
/// linear knot interpolation.
inline ProfileCurve ground_truth_at(const SceneSpec& spec, int frame) {
  if (spec.animation.empty()) return spec.profile;
  const auto& keys = spec.animation;
  if (frame <= keys.front().frame) {
    return {keys.front().k2, keys.front().k3, keys.front().k4, spec.profile.tension};
  }
  if (frame >= keys.back().frame) {
    return {keys.back().k2, keys.back().k3, keys.back().k4, spec.profile.tension};
  }
  std::size_t hi = 1;
  while (keys[hi].frame < frame) ++hi;
  const Keyframe& a = keys[hi - 1];
  const Keyframe& b = keys[hi];
  const double w = static_cast<double>(frame - a.frame) / static_cast<double>(b.frame - a.frame);
  ProfileCurve c;
  c.tension = spec.profile.tension;
  c.k2 = (1.0 - w) * a.k2 + w * b.k2;
  c.k3 = (1.0 - w) * a.k3 + w * b.k3;
  c.k4 = (1.0 - w) * a.k4 + w * b.k4;
  return c;
}

/// One frame of synthetic data. Deterministic per (spec, frame_index, seed).
inline GeneratedFrame generate_frame(const SceneSpec& spec, int frame_index, std::uint64_t seed) {
  if (frame_index < 0 || frame_index >= spec.frame_count)
    throw std::invalid_argument("generate_frame: frame index out of range");

  GeneratedFrame out;
  out.ground_truth = ground_truth_at(spec, frame_index);
  const ProfileCurve& gt = out.ground_truth;

  // Arc-length CDF of the profile weighted by rho: uniform-by-area sampling
  // of the revolved surface.
  const auto poly = revo::detail::dense_polyline(gt);
  std::vector<double> area_cdf(poly.points.size(), 0.0);
  std::vector<double> t_of(poly.points.size(), 0.0);
  for (std::size_t i = 1; i < poly.points.size(); ++i) {
    const double len = poly.cum_length[i] - poly.cum_length[i - 1];
    const double rho_mid = 0.5 * (poly.points[i].x() + poly.points[i - 1].x());
    area_cdf[i] = area_cdf[i - 1] + std::max(rho_mid, 1e-9) * len;
    t_of[i] = 2.0 * static_cast<double>(i) / static_cast<double>(poly.points.size() - 1);
  }
  const double area_total = area_cdf.back();

  const auto sample_curve_param = [&](double u) {
    const double target = u * area_total;
    std::size_t lo = 0, hi = area_cdf.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (area_cdf[mid] <= target)
        lo = mid;
      else
        hi = mid;
    }
    const double seg = area_cdf[hi] - area_cdf[lo];
    const double w = seg > 0.0 ? (target - area_cdf[lo]) / seg : 0.0;
    return (1.0 - w) * t_of[lo] + w * t_of[hi];
  };

  const auto blocked = [&](double theta) {
    for (const OccluderSpec& occ : spec.occluders) {
      if (occ.arc_deg <= 0.0) continue;
      const double center = occ.theta_at(frame_index) * std::numbers::pi_v<double> / 180.0;
      const double half = 0.5 * occ.arc_deg * std::numbers::pi_v<double> / 180.0;
      if (revo::detail::angle_diff(theta, center) <= half) return true;
    }
    return false;
  };

  for (std::size_t si = 0; si < spec.sensors.size(); ++si) {
    const SensorSpec& s = spec.sensors[si];
    const std::uint64_t sensor_seed = mix_seed(mix_seed(seed, 1000 + frame_index), si);
    std::mt19937_64 rng(sensor_seed);
    // Depth noise comes from its own stream so the sampled geometry is
    // identical between noisy and noiseless runs of the same seed.
    std::mt19937_64 noise_rng(mix_seed(sensor_seed, 0x4015E));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> depth_noise(0.0, s.noise_sigma > 0.0 ? s.noise_sigma : 1.0);

    const RigidTransform view = sensor_view(s);
    const Point3 sensor_pos = sensor_position(s);
    const double az = s.azimuth_deg * std::numbers::pi_v<double> / 180.0;
    const double half_sector = 0.5 * s.sector_deg * std::numbers::pi_v<double> / 180.0;

    std::vector<Point3> canonical;
    canonical.reserve(static_cast<std::size_t>(s.object_points) + s.table_points);

    const auto push_with_noise = [&](Point3 p) {
      if (s.noise_sigma > 0.0) {
        p += depth_noise(noise_rng) * (p - sensor_pos).normalized();
      }
      canonical.push_back(p);
    };

    // Object surface, restricted to this sensor's angular sector; samples in
    // an occluded arc are lost to the occluder.
    for (int i = 0; i < s.object_points; ++i) {
      const double t = sample_curve_param(u01(rng));
      const double theta = detail::wrap_angle(az + (2.0 * u01(rng) - 1.0) * half_sector);
      if (blocked(theta)) continue;
      const Knot2 prof = eval_profile(gt, t);
      push_with_noise(from_canonical_polar({std::max(prof.x(), 0.0), prof.y(), theta}));
    }

    // Turntable disk (the full plate is visible, not just the sector).
    for (int i = 0; i < s.table_points; ++i) {
      const double rho = spec.table_radius * std::sqrt(u01(rng));
      const double theta = u01(rng) * kTwoPi;
      push_with_noise(from_canonical_polar({rho, 0.0, theta}));
    }

    // Occluder blobs: dense ellipsoids whose bulk hangs inside the bowl above
    // the surface anchor (a hand working the clay). Only sensors facing the
    // blob image it; the object hides it from the far side.
    for (const OccluderSpec& occ : spec.occluders) {
      if (occ.points <= 0) continue;
      const double theta = occ.theta_at(frame_index) * std::numbers::pi_v<double> / 180.0;
      if (revo::detail::angle_diff(theta, az) > std::numbers::pi_v<double> / 2.0) continue;
      const Knot2 anchor =
          revo::detail::point_at_length(poly, occ.anchor_frac * poly.cum_length.back());
      const PolarPoint center_polar{std::max(anchor.x() - 1.2 * occ.radius, 0.0),
                                    anchor.y() + 0.5 * occ.radius, theta};
      const Point3 center = from_canonical_polar(center_polar);
      for (int i = 0; i < occ.points; ++i) {
        Point3 d;
        do {
          d = {2.0 * u01(rng) - 1.0, 2.0 * u01(rng) - 1.0, 2.0 * u01(rng) - 1.0};
        } while (d.squaredNorm() > 1.0);
        push_with_noise(center + Point3(occ.radius * d.x(), 1.5 * occ.radius * d.y(),
                                        occ.radius * d.z()));
      }
    }

    // Uniform outliers in a box around the scene.
    const int n_outliers = static_cast<int>(spec.outlier_fraction * s.object_points);
    for (int i = 0; i < n_outliers; ++i) {
      const double x = (2.0 * u01(rng) - 1.0) * 1.2 * spec.table_radius;
      const double z = (2.0 * u01(rng) - 1.0) * 1.2 * spec.table_radius;
      const double y = (u01(rng) * 1.4 - 0.2) * spec.h_max;
      canonical.push_back({x, y, z});
    }

    PointCloud cloud("sensor_" + std::to_string(si));
    cloud.reserve(canonical.size());
    for (const Point3& p : canonical) cloud.push_back(view(p));
    out.sensor_clouds.push_back(std::move(cloud));
  }
  return out;
}

}  // namespace revo
