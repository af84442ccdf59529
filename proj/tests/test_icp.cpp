#include <gtest/gtest.h>

#include <random>

#include "sheetloc/match3d/icp.hpp"
#include "sheetloc/match3d/workpiece.hpp"

namespace sheetloc {
namespace {

PointCloud bracket_cloud() {
  WorkpieceModel m;
  m.id = "bracket";
  m.outline = {{0, 0}, {80, 0}, {80, 25}, {25, 25}, {25, 60}, {0, 60}};
  m.thickness = 3.0;
  return sample_model(m, 3.0);
}

TEST(IcpRefine, GroundTruthIsAFixedPoint) {
  const PointCloud model_cloud = bracket_cloud();
  const RigidTransform gt = RigidTransform::from_axis_angle(
      Vec3(0.1, 0.2, 1.0), 25.0, Vec3(10, 20, 30));
  const PointCloud scene = apply(gt, model_cloud);
  const IcpResult res = icp_refine(scene, model_cloud, gt, 20, 1e-6);
  EXPECT_LT(res.pose.translation_distance_to(gt), 1e-9);
  EXPECT_LT(res.pose.rotation_angle_to(gt), 1e-9);
  EXPECT_LT(res.rms, 1e-9);
}

TEST(IcpRefine, RecoversFromPerturbedInitialGuess) {
  // Scene sampled denser than the registered model cloud, as a depth camera
  // render would be.
  WorkpieceModel m;
  m.id = "bracket";
  m.outline = {{0, 0}, {80, 0}, {80, 25}, {25, 25}, {25, 60}, {0, 60}};
  m.thickness = 3.0;
  const PointCloud model_cloud = sample_model(m, 2.0);
  const PointCloud dense = sample_model(m, 0.8);
  const RigidTransform gt = RigidTransform::from_axis_angle(
      Vec3(0.0, 0.0, 1.0), 15.0, Vec3(5, -8, 12));
  const PointCloud scene = apply(gt, dense);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vec3 axis(u(rng), u(rng), u(rng));
    if (axis.norm() < 1e-6) axis = Vec3::UnitZ();
    Vec3 shift(u(rng), u(rng), u(rng));
    shift = shift.normalized() * 5.0;  // 5 mm / 3 deg off
    const RigidTransform init =
        gt * RigidTransform::from_axis_angle(axis, 3.0, shift);
    const IcpResult res = icp_refine(scene, model_cloud, init, 100, 1e-10);
    EXPECT_LT(res.pose.translation_distance_to(gt), 0.1) << "trial " << trial;
    EXPECT_LT(res.pose.rotation_angle_to(gt), 0.1) << "trial " << trial;
  }
}

TEST(IcpRefine, RmsHistoryNeverIncreases) {
  std::mt19937 rng(9);
  std::normal_distribution<double> noise(0.0, 0.3);
  const PointCloud model_cloud = bracket_cloud();
  for (int trial = 0; trial < 10; ++trial) {
    const RigidTransform gt = RigidTransform::from_axis_angle(
        Vec3(0, 0, 1), trial * 11.0, Vec3(trial * 2.0, -trial, 4.0));
    PointCloud scene = apply(gt, model_cloud);
    for (Vec3& p : scene.points) {
      p += Vec3(noise(rng), noise(rng), noise(rng));
    }
    const RigidTransform init =
        gt * RigidTransform::from_axis_angle(Vec3(1, 0, 0), 2.0,
                                             Vec3(2, 1, -1));
    const IcpResult res = icp_refine(scene, model_cloud, init, 30, 1e-9);
    for (std::size_t i = 1; i < res.rms_history.size(); ++i) {
      EXPECT_LE(res.rms_history[i], res.rms_history[i - 1] + 1e-12);
    }
  }
}

TEST(IcpRefine, DisjointCloudsThrow) {
  const PointCloud model_cloud = bracket_cloud();
  const PointCloud scene =
      apply(RigidTransform::from_translation(Vec3(10000, 0, 0)), model_cloud);
  EXPECT_THROW(
      icp_refine(scene, model_cloud, RigidTransform::identity(), 10, 1e-6,
                 50.0),
      NoCorrespondences);
}

}  // namespace
}  // namespace sheetloc
