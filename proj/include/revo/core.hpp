// revo: profile reconstruction of revolving objects from depth point clouds.
//
// Core geometric types shared by every module: 3D points, validated point
// clouds, cylindrical-polar conversion around an arbitrary axis, and the
// error taxonomy. All lengths are millimetres, all angles radians.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace revo {

using Point3 = Eigen::Vector3d;
using Knot2 = Eigen::Vector2d;  // (rho, h) profile-space point

inline constexpr double kTwoPi = 2.0 * std::numbers::pi_v<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DetectionFailedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Point cloud
// ---------------------------------------------------------------------------

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

/// Ordered set of finite 3D points tagged with the frame they live in
/// (a sensor index or "canonical"). Iteration order is stable, so identical
/// inputs always produce identical downstream results.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::string frame_id) : frame_id(std::move(frame_id)) {}
  PointCloud(std::vector<Point3> points, std::string frame) : frame_id(std::move(frame)) {
    for (const Point3& p : points) check_finite(p);
    points_ = std::move(points);
  }

  void push_back(const Point3& p) {
    check_finite(p);
    points_.push_back(p);
  }

  void reserve(std::size_t n) { points_.reserve(n); }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Point3>& points() const { return points_; }

  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  std::string frame_id;

 private:
  static void check_finite(const Point3& p) {
    if (!is_finite(p)) throw std::invalid_argument("PointCloud: non-finite point rejected");
  }

  std::vector<Point3> points_;
};

// ---------------------------------------------------------------------------
// Cylindrical-polar conversion
// ---------------------------------------------------------------------------

struct PolarPoint {
  double rho = 0.0;    // orthogonal distance to the axis, >= 0
  double h = 0.0;      // signed elevation along the axis
  double theta = 0.0;  // angle in [0, 2*pi)
};

inline void check_unit_axis(const Point3& axis_dir) {
  if (std::abs(axis_dir.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("axis direction must have unit length");
}

/// Deterministic in-plane basis (e1, e2) perpendicular to the axis. e1 is the
/// global +x direction orthogonalized against the axis (falling back to +y
/// when the axis is nearly parallel to x), e2 completes a right-handed frame.
/// Fixed per axis, so theta values are comparable across points.
inline std::pair<Point3, Point3> polar_basis(const Point3& axis_dir) {
  Point3 e1 = Point3::UnitX() - axis_dir.dot(Point3::UnitX()) * axis_dir;
  if (e1.squaredNorm() < 1e-12) {
    e1 = Point3::UnitY() - axis_dir.dot(Point3::UnitY()) * axis_dir;
  }
  e1.normalize();
  const Point3 e2 = axis_dir.cross(e1);
  return {e1, e2};
}

inline PolarPoint to_polar(const Point3& p, const Point3& axis_origin, const Point3& axis_dir) {
  check_unit_axis(axis_dir);
  const auto [e1, e2] = polar_basis(axis_dir);
  const Point3 d = p - axis_origin;
  const double h = d.dot(axis_dir);
  const Point3 radial = d - h * axis_dir;
  PolarPoint q;
  q.h = h;
  q.rho = radial.norm();
  if (q.rho == 0.0) {
    q.theta = 0.0;  // on-axis convention
    return q;
  }
  double theta = std::atan2(radial.dot(e2), radial.dot(e1));
  if (theta < 0.0) theta += kTwoPi;
  if (theta >= kTwoPi) theta = 0.0;
  q.theta = theta;
  return q;
}

inline Point3 from_polar(const PolarPoint& q, const Point3& axis_origin, const Point3& axis_dir) {
  check_unit_axis(axis_dir);
  const auto [e1, e2] = polar_basis(axis_dir);
  return axis_origin + q.h * axis_dir + q.rho * (std::cos(q.theta) * e1 + std::sin(q.theta) * e2);
}

// Canonical frame the registration maps everything into.
inline Point3 canonical_center() { return Point3::Zero(); }
inline Point3 canonical_axis() { return Point3::UnitY(); }

inline PolarPoint to_canonical_polar(const Point3& p) {
  return to_polar(p, canonical_center(), canonical_axis());
}

inline Point3 from_canonical_polar(const PolarPoint& q) {
  return from_polar(q, canonical_center(), canonical_axis());
}

// ---------------------------------------------------------------------------
// Seed mixing
// ---------------------------------------------------------------------------

/// splitmix64 step; used to derive independent RNG streams from one master
/// seed so stage-level parallelism never reorders draws.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace revo
