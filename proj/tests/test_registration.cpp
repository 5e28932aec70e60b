#include <revo/registration.hpp>

#include <gtest/gtest.h>

#include <random>

#include <revo/accumulator.hpp>
#include <revo/synthetic.hpp>

#include "test_util.hpp"

using namespace revo;

TEST(AlignToCanonical, AlreadyCanonicalGivesIdentity) {
  const TurntableModel table{canonical_center(), canonical_axis(), 160.0};
  const RigidTransform u = align_to_canonical(table);
  EXPECT_LT((u.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(u.t.norm(), 1e-12);
}

TEST(AlignToCanonical, TranslationOnly) {
  const TurntableModel table{{0.0, 0.0, 10.0}, canonical_axis(), 160.0};
  const RigidTransform u = align_to_canonical(table);
  EXPECT_LT((u.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((u.t - Point3(0.0, 0.0, -10.0)).norm(), 1e-12);
}

TEST(AlignToCanonical, MapsCenterAndNormalForRandomModels) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const TurntableModel table{testutil::random_point(rng, -500, 500), testutil::random_unit(rng),
                               160.0};
    const RigidTransform u = align_to_canonical(table);
    EXPECT_LT((u(table.center) - canonical_center()).norm(), 1e-9);
    EXPECT_LT((u.R * table.normal - canonical_axis()).norm(), 1e-9);
    EXPECT_TRUE(u.is_rigid(1e-9));
  }
}

TEST(AlignToCanonical, AntiparallelNormalHandled) {
  const TurntableModel table{{5.0, 2.0, -3.0}, -canonical_axis(), 160.0};
  const RigidTransform u = align_to_canonical(table);
  EXPECT_TRUE(u.is_rigid(1e-9));
  EXPECT_LT((u.R * table.normal - canonical_axis()).norm(), 1e-9);
  EXPECT_LT((u(table.center)).norm(), 1e-9);
}

TEST(AxialRotation, ZeroAngleIsIdentity) {
  const RigidTransform v = axial_rotation(0.0);
  EXPECT_LT((v.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AxialRotation, HalfTurnIsInvolution) {
  const RigidTransform v = axial_rotation(std::numbers::pi);
  const RigidTransform twice = v * v;
  EXPECT_LT((twice.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AxialRotation, QuarterTurnGeometry) {
  const RigidTransform v = axial_rotation(std::numbers::pi / 2.0);
  const Point3 image = v({1.0, 0.0, 0.0});
  EXPECT_NEAR(image.dot(Point3(1.0, 0.0, 0.0)), 0.0, 1e-12);
  EXPECT_NEAR(image.dot(canonical_axis()), 0.0, 1e-12);
  EXPECT_NEAR(image.norm(), 1.0, 1e-12);
}

TEST(AxialRotation, FixesPointsOnAxis) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Point3 p = u(rng) * canonical_axis();
    const RigidTransform v = axial_rotation(u(rng));
    EXPECT_LT((v(p) - p).norm(), 1e-9);
  }
}

TEST(RigidTransform, CompositionAssociativeAndRigid) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const TurntableModel t1{testutil::random_point(rng, -100, 100), testutil::random_unit(rng), 1.0};
    const TurntableModel t2{testutil::random_point(rng, -100, 100), testutil::random_unit(rng), 1.0};
    const RigidTransform a = align_to_canonical(t1);
    const RigidTransform b = align_to_canonical(t2);
    const RigidTransform c = axial_rotation(1.1);
    const Eigen::Matrix4d left = ((a * b) * c).matrix();
    const Eigen::Matrix4d right = (a * (b * c)).matrix();
    EXPECT_LT((left - right).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_TRUE((a * b).is_rigid(1e-9));
    EXPECT_TRUE(a.inverse().is_rigid(1e-9));
    EXPECT_LT(((a * a.inverse()).matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(),
              1e-9);
  }
}

TEST(MergeRegistered, IdentityKeepsCloud) {
  PointCloud cloud("sensor_0");
  cloud.push_back({1.0, 2.0, 3.0});
  cloud.push_back({-4.0, 0.5, 2.0});
  const std::vector<PointCloud> clouds{cloud};
  const std::vector<RigidTransform> ms{RigidTransform::identity()};
  const PointCloud merged = merge_registered(clouds, ms);
  EXPECT_EQ(merged.frame_id, "canonical");
  ASSERT_EQ(merged.size(), cloud.size());
  for (std::size_t i = 0; i < merged.size(); ++i) EXPECT_EQ(merged[i], cloud[i]);
}

TEST(MergeRegistered, ConcatenatesInSensorOrder) {
  PointCloud a("sensor_0"), b("sensor_1");
  for (int i = 0; i < 5; ++i) a.push_back({double(i), 0.0, 0.0});
  for (int i = 0; i < 3; ++i) b.push_back({0.0, double(i), 0.0});
  const std::vector<PointCloud> clouds{a, b};
  const std::vector<RigidTransform> ms{RigidTransform::identity(), RigidTransform::identity()};
  const PointCloud merged = merge_registered(clouds, ms);
  ASSERT_EQ(merged.size(), 8u);
  EXPECT_EQ(merged[0], a[0]);
  EXPECT_EQ(merged[5], b[0]);
}

TEST(MergeRegistered, SizeMismatchRejected) {
  const std::vector<PointCloud> clouds{PointCloud("sensor_0")};
  const std::vector<RigidTransform> ms;
  EXPECT_THROW(merge_registered(clouds, ms), std::invalid_argument);
}

TEST(Registration, MergedSyntheticViewsLandOnSurface) {
  // Two noisy sensor views registered with the exact transforms: 99th
  // percentile of the distance to the true revolved surface stays at the
  // noise level.
  SceneSpec scene;
  scene.profile = {{0.0, 15.0}, {70.0, 30.0}, {95.0, 110.0}};
  scene.sensors.resize(2);
  scene.sensors[0] = {.azimuth_deg = 0.0, .elevation_deg = 40.0, .sector_deg = 120.0,
                      .noise_sigma = 1.5, .object_points = 3000, .table_points = 0};
  scene.sensors[1] = {.azimuth_deg = 180.0, .elevation_deg = 45.0, .sector_deg = 120.0,
                      .noise_sigma = 1.5, .object_points = 3000, .table_points = 0};
  const GeneratedFrame frame = generate_frame(scene, 0, 99);

  std::vector<RigidTransform> ms;
  for (std::size_t i = 0; i < 2; ++i) {
    TurntableModel table;
    const RigidTransform view = sensor_view(scene.sensors[i]);
    table.center = view(canonical_center());
    table.normal = view.R * canonical_axis();
    table.radius = scene.table_radius;
    ms.push_back(registration_transform(table, sensor_phi(scene, i)));
  }
  const PointCloud merged = merge_registered(frame.sensor_clouds, ms);

  std::vector<double> dists;
  for (const Point3& p : merged) {
    const PolarPoint q = to_canonical_polar(p);
    dists.push_back(testutil::point_to_curve_distance(frame.ground_truth, {q.rho, q.h}));
  }
  std::sort(dists.begin(), dists.end());
  const double p99 = dists[static_cast<std::size_t>(0.99 * (dists.size() - 1))];
  EXPECT_LT(p99, 3.0 * 1.5);
}

TEST(Registration, AccumulatorInvariantToAxialAngleChoice) {
  // With radially symmetric sensor clouds the accumulator cannot depend on
  // the per-sensor axial angle.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<PointCloud> clouds;
  for (int s = 0; s < 2; ++s) {
    PointCloud cloud("sensor_" + std::to_string(s));
    for (int i = 0; i < 3000; ++i) {
      cloud.push_back(from_canonical_polar(
          {40.0 + 50.0 * u01(rng), 120.0 * u01(rng), kTwoPi * u01(rng)}));
    }
    clouds.push_back(std::move(cloud));
  }
  const auto accumulate = [&](double phi0, double phi1) {
    const std::vector<RigidTransform> ms{axial_rotation(phi0), axial_rotation(phi1)};
    return build_accumulator(merge_registered(clouds, ms), 10.0, 160.0, 160.0, false);
  };
  const RadialAccumulator a = accumulate(0.0, std::numbers::pi / 2.0);
  const RadialAccumulator b = accumulate(1.234, -2.1);
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    EXPECT_NEAR(a.values()[i], b.values()[i], 1e-9 * std::max(1.0, a.values()[i]));
  }
}
