#pragma once

#include <optional>

#include "sheetloc/calib/beacon_plate.hpp"
#include "sheetloc/core/camera.hpp"
#include "sheetloc/match3d/icp.hpp"
#include "sheetloc/refine/plane.hpp"

namespace sheetloc {

struct PlatePoseOptions {
  /// Plate support plane measured from the depth data, in the camera
  /// frame. A depth camera sees the plate's plane directly; intersecting
  /// the beacon rays with it removes the perspective-three-point twin
  /// ambiguity and the near-frontal noise amplification entirely. Without
  /// it the pose comes from P3P with the faces-camera/most-frontal
  /// convention.
  std::optional<Plane> support;
};

namespace detail {

/// Root candidates of x^4 + a3 x^3 + a2 x^2 + a1 x + a0 via the companion
/// matrix. The real parts of all eigenvalues are kept and Newton-polished:
/// measurement noise can push a near-double root pair slightly complex, and
/// discarding it would lose the true pose. Geometric verification happens
/// downstream.
inline std::vector<double> quartic_root_candidates(double a3, double a2,
                                                   double a1, double a0) {
  Mat4 companion = Mat4::Zero();
  companion(0, 3) = -a0;
  companion(1, 3) = -a1;
  companion(2, 3) = -a2;
  companion(3, 3) = -a3;
  companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;
  Eigen::EigenSolver<Mat4> solver(companion);
  std::vector<double> roots;
  for (int i = 0; i < 4; ++i) {
    double x = solver.eigenvalues()[i].real();
    for (int n = 0; n < 5; ++n) {
      const double f = (((x + a3) * x + a2) * x + a1) * x + a0;
      const double df = ((4.0 * x + 3.0 * a3) * x + 2.0 * a2) * x + a1;
      if (std::abs(df) < 1e-14) break;
      const double step = f / df;
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    bool duplicate = false;
    for (double r : roots) {
      if (std::abs(r - x) < 1e-9 * (1.0 + std::abs(x))) duplicate = true;
    }
    if (!duplicate) roots.push_back(x);
  }
  return roots;
}

struct P3pEmbedding {
  std::array<double, 3> depths;
  double residual;  // constraint violation of the unconstrained edge, mm
};

/// Grunert's P3P: camera-frame depths s_i along three unit rays to three
/// points with known pairwise distances. Returns every positive-depth
/// embedding with its geometric residual.
inline std::vector<P3pEmbedding> grunert_depths(
    const std::array<Vec3, 3>& rays, const std::array<Vec3, 3>& points) {
  const double a = (points[1] - points[2]).norm();  // opposite P1
  const double b = (points[0] - points[2]).norm();  // opposite P2
  const double c = (points[0] - points[1]).norm();  // opposite P3
  const double cos_alpha = rays[1].dot(rays[2]);
  const double cos_beta = rays[0].dot(rays[2]);
  const double cos_gamma = rays[0].dot(rays[1]);
  const double a2 = a * a, b2 = b * b, c2 = c * c;

  const double q = (a2 - c2) / b2;
  const double a4 =
      (q - 1.0) * (q - 1.0) - 4.0 * c2 / b2 * cos_alpha * cos_alpha;
  if (std::abs(a4) < 1e-15) return {};
  const double a3 =
      4.0 * (q * (1.0 - q) * cos_beta -
             (1.0 - (a2 + c2) / b2) * cos_alpha * cos_gamma +
             2.0 * c2 / b2 * cos_alpha * cos_alpha * cos_beta);
  const double a2c =
      2.0 * (q * q - 1.0 + 2.0 * q * q * cos_beta * cos_beta +
             2.0 * ((b2 - c2) / b2) * cos_alpha * cos_alpha -
             4.0 * ((a2 + c2) / b2) * cos_alpha * cos_beta * cos_gamma +
             2.0 * ((b2 - a2) / b2) * cos_gamma * cos_gamma);
  const double a1 =
      4.0 * (-q * (1.0 + q) * cos_beta +
             2.0 * a2 / b2 * cos_gamma * cos_gamma * cos_beta -
             (1.0 - (a2 + c2) / b2) * cos_alpha * cos_gamma);
  const double a0 = (1.0 + q) * (1.0 + q) - 4.0 * a2 / b2 * cos_gamma *
                                                cos_gamma;

  std::vector<P3pEmbedding> solutions;
  for (double v : quartic_root_candidates(a3 / a4, a2c / a4, a1 / a4,
                                          a0 / a4)) {
    const double den = 1.0 + v * v - 2.0 * v * cos_beta;
    if (den <= 1e-12) continue;
    const double s1 = std::sqrt(b2 / den);
    const double s3 = v * s1;
    if (s1 <= 0.0 || s3 <= 0.0) continue;
    // s2 from the P1-P2 edge; the unconstrained P2-P3 edge measures how
    // well the branch closes the triangle.
    const double disc = s1 * s1 * cos_gamma * cos_gamma - (s1 * s1 - c2);
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    for (double s2 : {s1 * cos_gamma + sq, s1 * cos_gamma - sq}) {
      if (s2 <= 0.0) continue;
      const double err = std::abs((s2 * rays[1] - s3 * rays[2]).norm() - a);
      if (err < 0.02 * a) {
        solutions.push_back({{s1, s2, s3}, err});
      }
    }
  }
  return solutions;
}

}  // namespace detail

/// Pose of the beacon plate in the camera frame (cam_H_cal) from three
/// labelled pixel centroids: Grunert's perspective-three-point solution
/// over the plate's known beacon geometry. Among the geometrically
/// consistent embeddings only poses whose plate normal faces the camera
/// are kept, and the most frontal one wins.
///
/// Operating envelope: with sub-pixel centroids the selection is exact for
/// plate tilts up to ~8 degrees from frontal (the mounted-plate geometry
/// this referencing exists for); between ~10 and 20 degrees a second P3P
/// embedding approaches within a degree of the true pose and accuracy
/// degrades accordingly.
inline RigidTransform plate_pose(const std::array<Vec2, 3>& centroids,
                                 const BeaconPlate& plate,
                                 const CameraModel& cam,
                                 const PlatePoseOptions& opt = {}) {
  plate.validate();
  cam.validate();

  // Collinear pixel centroids cannot fix a plane.
  const Vec2 e1 = centroids[1] - centroids[0];
  const Vec2 e2 = centroids[2] - centroids[0];
  if (std::abs(e1.x() * e2.y() - e1.y() * e2.x()) <
      1e-6 * std::max(1.0, e1.norm() * e2.norm())) {
    throw DegenerateGeometry("plate_pose: collinear centroids");
  }

  std::array<Vec3, 3> rays;
  std::array<Vec3, 3> plate_pts;
  for (int i = 0; i < 3; ++i) {
    rays[i] = cam.pixel_ray(centroids[i].x(), centroids[i].y()).normalized();
    plate_pts[i] = plate.beacon3(i);
  }

  if (opt.support) {
    // Ray-plane intersection gives the beacon positions in the camera
    // frame directly; the labelled 3-point alignment is then unique.
    std::vector<Vec3> cam_pts(3), model_pts(3);
    for (int i = 0; i < 3; ++i) {
      const double denom = opt.support->normal.dot(rays[i]);
      if (std::abs(denom) < 1e-9) {
        throw DegenerateGeometry("plate_pose: beacon ray parallel to plane");
      }
      const double s = opt.support->offset / denom;
      if (s <= 0.0) {
        throw DegenerateGeometry("plate_pose: plane behind the camera");
      }
      cam_pts[i] = s * rays[i];
      model_pts[i] = plate_pts[i];
    }
    return detail::solve_rigid(model_pts, cam_pts);
  }

  const auto embeddings = detail::grunert_depths(rays, plate_pts);
  if (embeddings.empty()) {
    throw DegenerateGeometry("plate_pose: no P3P solution");
  }

  struct Candidate {
    RigidTransform pose;
    double frontal;
    double residual;
  };
  std::vector<Candidate> candidates;
  for (const auto& emb : embeddings) {
    std::vector<Vec3> cam_pts(3), model_pts(3);
    for (int i = 0; i < 3; ++i) {
      cam_pts[i] = emb.depths[i] * rays[i];
      model_pts[i] = plate_pts[i];
    }
    const RigidTransform pose = detail::solve_rigid(model_pts, cam_pts);
    double align = emb.residual;
    for (int i = 0; i < 3; ++i) {
      align = std::max(align, (pose * model_pts[i] - cam_pts[i]).norm());
    }
    const Vec3 n_cam = pose.rotate(Vec3::UnitZ());
    Vec3 center = Vec3::Zero();
    for (const Vec3& p : cam_pts) center += p / 3.0;
    const double frontal = n_cam.dot(-center.normalized());
    if (frontal <= 0.0) continue;  // plate faces away
    candidates.push_back({pose, frontal, align});
  }
  if (candidates.empty()) {
    throw DegenerateGeometry("plate_pose: no camera-facing solution");
  }
  // Geometrically tight embeddings first, the most frontal among them.
  double best_residual = std::numeric_limits<double>::infinity();
  for (const Candidate& c : candidates) {
    best_residual = std::min(best_residual, c.residual);
  }
  const double cutoff = 3.0 * best_residual + 1e-6;
  const Candidate* best = nullptr;
  for (const Candidate& c : candidates) {
    if (c.residual > cutoff) continue;
    if (!best || c.frontal > best->frontal) best = &c;
  }
  return best->pose;
}

/// Scene frame in camera coordinates from a detected plate pose and the
/// known plate-to-scene mounting transform.
inline RigidTransform scene_frame_from_plate(const RigidTransform& cam_H_cal,
                                             const RigidTransform& cal_H_scene) {
  return cam_H_cal * cal_H_scene;
}

}  // namespace sheetloc
