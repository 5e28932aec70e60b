// Rigid registration of per-sensor clouds into the canonical frame. Each
// sensor's transform is the alignment of its detected turntable onto the
// canonical center/axis followed by a configured rotation about that axis.

#pragma once

#include <revo/core.hpp>
#include <revo/turntable.hpp>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace revo {

/// Rotation + translation, applied as p' = R*p + t. Composition a * b applies
/// b first, then a.
struct RigidTransform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Point3 t = Point3::Zero();

  Point3 operator()(const Point3& p) const { return R * p + t; }

  RigidTransform operator*(const RigidTransform& other) const {
    return {R * other.R, R * other.t + t};
  }

  RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * t)}; }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = t;
    return m;
  }

  bool is_rigid(double tol = 1e-9) const {
    const Eigen::Matrix3d gram = R.transpose() * R;
    return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(R.determinant() - 1.0) <= tol;
  }

  static RigidTransform identity() { return {}; }
};

/// Transform U mapping the detected turntable onto the canonical frame: the
/// minimal rotation taking the table normal onto the canonical axis, with the
/// translation chosen so the table center lands exactly on the origin.
/// Antiparallel normals rotate by pi about the canonical +x direction.
inline RigidTransform align_to_canonical(const TurntableModel& table) {
  const Point3 n = table.normal.normalized();
  const Point3 target = canonical_axis();
  const double c = n.dot(target);
  Eigen::Matrix3d rot;
  if (c >= 1.0 - 1e-12) {
    rot = Eigen::Matrix3d::Identity();
  } else if (c <= -1.0 + 1e-12) {
    rot = Eigen::AngleAxisd(std::numbers::pi_v<double>, Point3::UnitX()).toRotationMatrix();
  } else {
    const Point3 axis = n.cross(target).normalized();
    const double angle = std::atan2(n.cross(target).norm(), c);
    rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  }
  return {rot, canonical_center() - rot * table.center};
}

/// Rotation V by phi about the canonical revolution axis, no translation.
inline RigidTransform axial_rotation(double phi) {
  return {Eigen::AngleAxisd(phi, canonical_axis()).toRotationMatrix(), Point3::Zero()};
}

/// Full per-sensor registration M: align the table to canonical, then rotate
/// by the setup angle phi about the revolution axis.
inline RigidTransform registration_transform(const TurntableModel& table, double phi) {
  return axial_rotation(phi) * align_to_canonical(table);
}

/// Apply a transform to every point of a cloud (frame id is left to callers).
inline PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& m,
                                  std::string frame_id) {
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const Point3& p : cloud) out.push_back(m(p));
  return PointCloud(std::move(out), std::move(frame_id));
}

/// Concatenate the registered clouds in sensor order into one canonical-frame
/// cloud. Point order is sensor order, then source order within each cloud.
inline PointCloud merge_registered(std::span<const PointCloud> clouds,
                                   std::span<const RigidTransform> transforms) {
  if (clouds.size() != transforms.size())
    throw std::invalid_argument("merge_registered: clouds/transforms size mismatch");
  std::size_t total = 0;
  for (const PointCloud& c : clouds) total += c.size();
  PointCloud merged("canonical");
  merged.reserve(total);
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    for (const Point3& p : clouds[i]) merged.push_back(transforms[i](p));
  }
  return merged;
}

}  // namespace revo
