#include <gtest/gtest.h>

#include <random>

#include "sheetloc/calib/plate_pose.hpp"
#include "sheetloc/calib/session_io.hpp"
#include "sheetloc/synth/render.hpp"

namespace sheetloc {
namespace {

BeaconPlate test_plate() {
  BeaconPlate plate;
  plate.beacons = {Vec2(-140, -100), Vec2(140, -100), Vec2(-140, 100)};
  return plate;
}

// Narrow-field referencing setup: the plate fills most of a ~26 degree
// view from 1.1-1.6 m, which is what keeps the 3-point tilt estimate
// conditioned.
CameraModel calib_camera() {
  CameraModel cam;
  cam.width = 960;
  cam.height = 720;
  cam.focal_length_px = 2100.0;
  cam.principal_point = Vec2(480.0, 360.0);
  cam.z_min = 870.0;
  cam.z_max = 2150.0;
  return cam;
}

/// Renders the beacon plate at plate_H (plate frame in scene frame) seen by
/// a camera at cam_H (camera in scene frame).
RenderResult render_plate(const BeaconPlate& plate,
                          const RigidTransform& plate_pose_scene,
                          const RigidTransform& cam_pose_scene,
                          const CameraModel& cam) {
  SceneSpec spec;
  spec.camera = cam;
  spec.camera_pose = cam_pose_scene;
  Fixture f;
  f.type = FixtureType::plate;
  f.size = Vec3(420.0, 300.0, 8.0);
  // The plate fixture frame is its centered box; beacons are specified on
  // the top face, and the plate frame's z=0 plane must be that face.
  f.pose = plate_pose_scene * RigidTransform::from_translation(Vec3(0, 0, -4.0));
  f.intensity = 0.15;
  f.beacons = {plate.beacons[0], plate.beacons[1], plate.beacons[2]};
  f.beacon_radius = 20.0;
  f.beacon_intensity = 1.0;
  spec.fixtures.push_back(f);
  return render(spec, {});
}

RigidTransform overhead_camera(double h) {
  Mat3 r;
  r.col(0) = Vec3::UnitX();
  r.col(1) = -Vec3::UnitY();
  r.col(2) = -Vec3::UnitZ();
  return RigidTransform(r, Vec3(0.0, 0.0, h));
}

// ---------------------------------------------------------------------------
// detect_beacons

TEST(DetectBeacons, CentroidsMatchProjectedGroundTruth) {
  const BeaconPlate plate = test_plate();
  const CameraModel cam = calib_camera();
  const RigidTransform cam_pose = overhead_camera(1200.0);
  const RigidTransform plate_pose_scene =
      RigidTransform::from_axis_angle(Vec3::UnitZ(), 15.0, Vec3(20, -10, 0));
  const RenderResult r = render_plate(plate, plate_pose_scene, cam_pose, cam);
  const auto centroids = detect_beacons(r.intensity, plate);
  const RigidTransform to_cam = cam_pose.inverse();
  for (int i = 0; i < 3; ++i) {
    const Vec3 p_cam = to_cam * (plate_pose_scene * plate.beacon3(i));
    const Vec2 uv = cam.project(p_cam);
    EXPECT_NEAR(centroids[i].x(), uv.x(), 0.1);
    EXPECT_NEAR(centroids[i].y(), uv.y(), 0.1);
  }
}

TEST(DetectBeacons, TwoBlobsRaiseCountMismatch) {
  DepthImage img = DepthImage::make(100, 100, ImageKind::intensity);
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) img.set(x, y, 0.1);
  }
  for (int dy = 0; dy < 4; ++dy) {
    for (int dx = 0; dx < 4; ++dx) {
      img.set(20 + dx, 20 + dy, 1.0);
      img.set(70 + dx, 60 + dy, 1.0);
    }
  }
  EXPECT_THROW(detect_beacons(img, test_plate()), BeaconCountMismatch);
}

TEST(DetectBeacons, EquilateralLayoutIsAmbiguous) {
  BeaconPlate equilateral;
  equilateral.beacons = {Vec2(0, 0), Vec2(200, 0), Vec2(100, 173.2050808)};
  DepthImage img = DepthImage::make(10, 10, ImageKind::intensity);
  EXPECT_THROW(detect_beacons(img, equilateral), AmbiguousLabelling);
}

TEST(DetectBeacons, WrongImageKindRejected) {
  DepthImage img = DepthImage::make(10, 10, ImageKind::depth);
  EXPECT_THROW(detect_beacons(img, test_plate()), WrongImageKind);
}

// ---------------------------------------------------------------------------
// plate_pose

/// The plate's support plane as a depth camera measures it: the dominant
/// RANSAC plane of the rendered cloud.
Plane measured_plate_plane(const RenderResult& r) {
  const auto planes =
      fit_planes_ransac(r.cloud, 0.5, r.cloud.size() / 3, 1, {.seed = 3});
  EXPECT_EQ(planes.size(), 1u);
  return planes.empty() ? Plane{} : planes[0];
}

TEST(PlatePose, RecoversRenderedPose) {
  const BeaconPlate plate = test_plate();
  const CameraModel cam = calib_camera();
  const RigidTransform cam_pose = overhead_camera(1300.0);
  const RigidTransform plate_pose_scene = RigidTransform::from_axis_angle(
      Vec3(0.3, 1.0, 0.2), 8.0, Vec3(15.0, 25.0, 0.0));
  const RenderResult r = render_plate(plate, plate_pose_scene, cam_pose, cam);
  const auto centroids = detect_beacons(r.intensity, plate);
  const RigidTransform cam_H_cal = plate_pose(
      centroids, plate, cam, {.support = measured_plate_plane(r)});
  const RigidTransform gt = cam_pose.inverse() * plate_pose_scene;
  EXPECT_LT(cam_H_cal.translation_distance_to(gt), 0.5);
  EXPECT_LT(cam_H_cal.rotation_angle_to(gt), 0.1);
}

// Pure P3P (no depth-plane support): accurate where the embeddings are well
// separated and the true one faces the camera most frontally.
TEST(PlatePose, PureP3pOnFavorablePose) {
  const BeaconPlate plate = test_plate();
  const CameraModel cam = calib_camera();
  const RigidTransform cam_pose = overhead_camera(1300.0);
  const RigidTransform plate_pose_scene = RigidTransform::from_axis_angle(
      Vec3(0.3, 1.0, 0.2), 8.0, Vec3(15.0, 25.0, 0.0));
  const RenderResult r = render_plate(plate, plate_pose_scene, cam_pose, cam);
  const auto centroids = detect_beacons(r.intensity, plate);
  const RigidTransform cam_H_cal = plate_pose(centroids, plate, cam);
  const RigidTransform gt = cam_pose.inverse() * plate_pose_scene;
  EXPECT_LT(cam_H_cal.translation_distance_to(gt), 5.0);
  EXPECT_LT(cam_H_cal.rotation_angle_to(gt), 1.0);
}

TEST(PlatePose, FrontalPlateGivesAxialTranslation) {
  const BeaconPlate plate = test_plate();
  const CameraModel cam = calib_camera();
  const double d = 1000.0;
  // Plate parallel to the image plane, facing the camera (its +z normal
  // points back along the optical axis), origin on the axis at depth d.
  const RigidTransform gt =
      RigidTransform(RigidTransform::rot_x(180.0).rotation(), Vec3(0, 0, d));
  std::array<Vec2, 3> centroids;
  for (int i = 0; i < 3; ++i) {
    centroids[i] = cam.project(gt * plate.beacon3(i));
  }
  const RigidTransform pose = plate_pose(centroids, plate, cam);
  EXPECT_LT((pose.translation() - Vec3(0, 0, d)).norm(), 1e-6);
  EXPECT_LT(pose.rotation_angle_to(gt), 1e-6);
}

TEST(PlatePose, CollinearCentroidsDegenerate) {
  const BeaconPlate plate = test_plate();
  const CameraModel cam = calib_camera();
  EXPECT_THROW(
      plate_pose({Vec2(100, 100), Vec2(200, 100), Vec2(300, 100)}, plate, cam),
      DegenerateGeometry);
}

// Property: the full referencing procedure (detect beacons, measure the
// support plane from depth, solve the pose) inverts the renderer over
// random plate placements in the frustum, tilts up to 15 degrees.
TEST(PlatePose, RenderRoundTripOverRandomPoses) {
  const BeaconPlate plate = test_plate();
  const CameraModel cam = calib_camera();
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> tilt(0.0, 15.0);
  std::uniform_real_distribution<double> yaw(0.0, 360.0);
  std::uniform_real_distribution<double> offset(-30.0, 30.0);
  std::uniform_real_distribution<double> height(1400.0, 1800.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Vec3 tilt_axis(unit(rng), unit(rng), 0.0);
    if (tilt_axis.norm() < 1e-6) tilt_axis = Vec3::UnitX();
    const RigidTransform plate_pose_scene =
        RigidTransform::from_translation(Vec3(offset(rng), offset(rng), 0.0)) *
        RigidTransform::from_axis_angle(tilt_axis, tilt(rng)) *
        RigidTransform::rot_z(yaw(rng));
    const RigidTransform cam_pose = overhead_camera(height(rng));
    const RenderResult r = render_plate(plate, plate_pose_scene, cam_pose, cam);
    std::array<Vec2, 3> centroids;
    try {
      centroids = detect_beacons(r.intensity, plate);
    } catch (const BeaconCountMismatch&) {
      continue;  // beacon clipped out of view; placement not usable
    }
    const RigidTransform cam_H_cal = plate_pose(
        centroids, plate, cam, {.support = measured_plate_plane(r)});
    const RigidTransform gt = cam_pose.inverse() * plate_pose_scene;
    EXPECT_LT(cam_H_cal.translation_distance_to(gt), 0.5) << "trial " << trial;
    EXPECT_LT(cam_H_cal.rotation_angle_to(gt), 0.1) << "trial " << trial;
    ++checked;
  }
  EXPECT_GE(checked, 90);
}

TEST(SceneFrameFromPlate, IdentityMountingIsPassThrough) {
  const RigidTransform cam_H_cal =
      RigidTransform::from_axis_angle(Vec3(1, 2, 3), 30.0, Vec3(5, 6, 7));
  const RigidTransform out =
      scene_frame_from_plate(cam_H_cal, RigidTransform::identity());
  EXPECT_LT(out.rotation_angle_to(cam_H_cal), 1e-12);
  const RigidTransform round =
      out.inverse() * scene_frame_from_plate(cam_H_cal,
                                             RigidTransform::identity());
  EXPECT_LT(round.rotation_angle_to(RigidTransform::identity()), 1e-9);
  EXPECT_LT(round.translation().norm(), 1e-9);
}

// ---------------------------------------------------------------------------
// hand_eye_calibrate

std::vector<HandEyeSample> synth_samples(const RigidTransform& tool_H_cam,
                                         const RigidTransform& base_H_cal,
                                         int n, unsigned seed,
                                         double noise_mm = 0.0,
                                         double noise_deg = 0.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> angle(-40.0, 40.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> span(-300.0, 300.0);
  std::normal_distribution<double> tn(0.0, noise_mm);
  std::normal_distribution<double> rn(0.0, noise_deg);
  std::vector<HandEyeSample> samples;
  for (int i = 0; i < n; ++i) {
    Vec3 axis(unit(rng), unit(rng), unit(rng));
    if (axis.norm() < 1e-6) axis = Vec3::UnitZ();
    HandEyeSample s;
    s.base_H_tool = RigidTransform::from_axis_angle(
        axis, angle(rng), Vec3(span(rng), span(rng), 800.0 + span(rng)));
    s.cam_H_cal = (s.base_H_tool * tool_H_cam).inverse() * base_H_cal;
    if (noise_mm > 0.0 || noise_deg > 0.0) {
      Vec3 nax(unit(rng), unit(rng), unit(rng));
      if (nax.norm() < 1e-6) nax = Vec3::UnitX();
      s.cam_H_cal = s.cam_H_cal *
                    RigidTransform::from_axis_angle(
                        nax, rn(rng), Vec3(tn(rng), tn(rng), tn(rng)));
    }
    s.timestamp = "2026-08-10T12:00:00Z";
    samples.push_back(s);
  }
  return samples;
}

TEST(HandEye, NoiseFreeRecoveryIsExact) {
  const RigidTransform tool_H_cam =
      RigidTransform::from_axis_angle(Vec3(0.2, 1.0, -0.4), 25.0,
                                      Vec3(40.0, -25.0, 90.0));
  const RigidTransform base_H_cal =
      RigidTransform::from_axis_angle(Vec3::UnitZ(), 75.0,
                                      Vec3(600.0, 300.0, 0.0));
  const auto samples = synth_samples(tool_H_cam, base_H_cal, 8, 42);
  const HandEyeResult res = hand_eye_calibrate(samples);
  EXPECT_LT(res.tool_H_cam.translation_distance_to(tool_H_cam), 1e-6);
  EXPECT_LT(res.tool_H_cam.rotation_angle_to(tool_H_cam), 1e-6);
  EXPECT_LT(res.base_H_cal.translation_distance_to(base_H_cal), 1e-6);
  EXPECT_LT(res.base_H_cal.rotation_angle_to(base_H_cal), 1e-6);
  EXPECT_LT(res.residual, 1e-6);
}

TEST(HandEye, SharedRotationAxisIsInsufficient) {
  const RigidTransform tool_H_cam =
      RigidTransform::from_axis_angle(Vec3::UnitY(), 12.0, Vec3(30, 0, 80));
  const RigidTransform base_H_cal =
      RigidTransform::from_translation(Vec3(500, 200, 0));
  std::vector<HandEyeSample> samples;
  for (int i = 0; i < 6; ++i) {
    HandEyeSample s;
    s.base_H_tool = RigidTransform::from_axis_angle(
        Vec3::UnitZ(), 15.0 * i, Vec3(100.0 * i, 50.0, 700.0));
    s.cam_H_cal = (s.base_H_tool * tool_H_cam).inverse() * base_H_cal;
    samples.push_back(s);
  }
  EXPECT_THROW(hand_eye_calibrate(samples), InsufficientMotion);
}

TEST(HandEye, TooFewSamplesRejected) {
  EXPECT_THROW(hand_eye_calibrate({}), TooFewSamples);
  EXPECT_THROW(hand_eye_calibrate(std::vector<HandEyeSample>(2)),
               TooFewSamples);
}

// Monte-Carlo noise sweep: error grows monotonically with the noise level
// and the chain closure stays within 3x the reported residual.
TEST(HandEye, NoiseSweepMonotoneAndClosureBounded) {
  const RigidTransform tool_H_cam =
      RigidTransform::from_axis_angle(Vec3(1.0, 0.3, 0.1), 35.0,
                                      Vec3(50.0, 10.0, 70.0));
  const RigidTransform base_H_cal =
      RigidTransform::from_axis_angle(Vec3::UnitX(), 5.0,
                                      Vec3(550.0, -250.0, 20.0));
  std::vector<double> errors;
  for (double sigma : {0.1, 0.5, 1.0}) {
    double err_sum = 0.0;
    for (unsigned seed = 0; seed < 10; ++seed) {
      const auto samples = synth_samples(tool_H_cam, base_H_cal, 12,
                                         100 + seed, sigma, sigma * 0.05);
      const HandEyeResult res = hand_eye_calibrate(samples);
      err_sum += res.tool_H_cam.translation_distance_to(tool_H_cam);
      EXPECT_GT(res.residual, 0.0);
      // Chain closure bound.
      double worst = 0.0;
      for (const HandEyeSample& s : samples) {
        const RigidTransform z = s.base_H_tool * res.tool_H_cam * s.cam_H_cal;
        worst = std::max(worst, z.translation_distance_to(res.base_H_cal));
      }
      EXPECT_LE(worst, 3.0 * res.residual + 1e-9);
    }
    errors.push_back(err_sum / 10.0);
  }
  EXPECT_LT(errors[0], errors[1]);
  EXPECT_LT(errors[1], errors[2]);
}

TEST(HandEye, SessionJsonRoundTrip) {
  const auto samples = synth_samples(
      RigidTransform::from_axis_angle(Vec3::UnitY(), 20.0, Vec3(10, 20, 30)),
      RigidTransform::from_translation(Vec3(400, 100, 0)), 4, 7);
  const nlohmann::json j = session_to_json(samples);
  const auto back = session_from_json(j);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_LT(back[i].base_H_tool.rotation_angle_to(samples[i].base_H_tool),
              1e-9);
    EXPECT_LT(back[i].cam_H_cal.translation_distance_to(samples[i].cam_H_cal),
              1e-9);
    EXPECT_EQ(back[i].timestamp, "2026-08-10T12:00:00Z");
  }
}

}  // namespace
}  // namespace sheetloc
