#pragma once

#include <string>
#include <vector>

#include "sheetloc/core/transform.hpp"

namespace sheetloc {

/// One calibration observation: robot flange pose from the controller plus
/// the plate pose seen by the camera at that instant.
struct HandEyeSample {
  RigidTransform base_H_tool;
  RigidTransform cam_H_cal;
  std::string timestamp;  // ISO-8601, informational
};

struct HandEyeResult {
  RigidTransform tool_H_cam;
  RigidTransform base_H_cal;
  double residual = 0.0;  // RMS translation closure error, mm
};

struct HandEyeOptions {
  std::size_t min_samples = 3;
  /// Relative motions with rotation axes spread less than this cannot
  /// condition the rotation solve.
  double min_axis_spread_deg = 10.0;
};

/// Eye-in-hand calibration. Every sample closes the chain
/// base_H_cal = base_H_tool_i * tool_H_cam * cam_H_cal_i, so relative
/// motions satisfy A_ij X = X B_ij with A_ij = base_H_tool_i^-1 *
/// base_H_tool_j and B_ij = cam_H_cal_i * cam_H_cal_j^-1. The rotation of X
/// comes from least-squares alignment of the relative rotation axes, the
/// translation from the stacked linear system, and base_H_cal from
/// averaging the per-sample chains. The residual is the RMS distance of
/// each sample's chain closure from the average.
inline HandEyeResult hand_eye_calibrate(const std::vector<HandEyeSample>&
                                            samples,
                                        const HandEyeOptions& opt = {}) {
  if (samples.size() < opt.min_samples) {
    throw TooFewSamples("hand_eye_calibrate: need at least " +
                        std::to_string(opt.min_samples) + " samples");
  }

  struct Motion {
    RigidTransform a, b;
    Vec3 axis_a, axis_b;
    double angle_deg;
  };
  std::vector<Motion> motions;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      Motion m;
      m.a = samples[i].base_H_tool.inverse() * samples[j].base_H_tool;
      m.b = samples[i].cam_H_cal * samples[j].cam_H_cal.inverse();
      const Eigen::AngleAxisd aa(m.a.rotation());
      const Eigen::AngleAxisd bb(m.b.rotation());
      m.angle_deg = rad_to_deg(aa.angle());
      if (m.angle_deg < 0.5) continue;  // no usable rotation information
      m.axis_a = aa.axis();
      m.axis_b = bb.axis();
      // Rotation angles of A and B must agree; align axis signs via angles
      // in [0, pi] (AngleAxisd already normalises them so).
      motions.push_back(m);
    }
  }
  if (motions.size() < 2) {
    throw InsufficientMotion(
        "hand_eye_calibrate: fewer than two rotating relative motions");
  }
  double max_spread = 0.0;
  for (std::size_t i = 0; i < motions.size(); ++i) {
    for (std::size_t j = i + 1; j < motions.size(); ++j) {
      const double c =
          std::abs(motions[i].axis_a.dot(motions[j].axis_a));
      max_spread = std::max(max_spread,
                            rad_to_deg(std::acos(std::clamp(c, -1.0, 1.0))));
    }
  }
  if (max_spread < opt.min_axis_spread_deg) {
    throw InsufficientMotion(
        "hand_eye_calibrate: rotation axes nearly parallel (spread " +
        std::to_string(max_spread) + " deg)");
  }

  // Rotation: R_x aligning the camera-side axes onto the tool-side axes.
  Mat3 h = Mat3::Zero();
  for (const Motion& m : motions) {
    h += m.axis_b * m.axis_a.transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  const Mat3 rx = svd.matrixV() * d * svd.matrixU().transpose();

  // Translation: (R_A - I) t_x = R_x t_B - t_A stacked over motions.
  Eigen::MatrixXd lhs(3 * motions.size(), 3);
  Eigen::VectorXd rhs(3 * motions.size());
  for (std::size_t i = 0; i < motions.size(); ++i) {
    lhs.block<3, 3>(3 * i, 0) = motions[i].a.rotation() - Mat3::Identity();
    rhs.segment<3>(3 * i) =
        rx * motions[i].b.translation() - motions[i].a.translation();
  }
  const Vec3 tx = lhs.colPivHouseholderQr().solve(rhs);

  HandEyeResult result;
  result.tool_H_cam = RigidTransform(project_to_rotation(rx), tx);

  // base_H_cal: average the per-sample chain closures.
  Eigen::Vector4d q_sum = Eigen::Vector4d::Zero();
  Vec3 t_sum = Vec3::Zero();
  std::vector<RigidTransform> chains;
  for (const HandEyeSample& s : samples) {
    const RigidTransform z =
        s.base_H_tool * result.tool_H_cam * s.cam_H_cal;
    chains.push_back(z);
    Eigen::Quaterniond q(z.rotation());
    Eigen::Vector4d qv(q.w(), q.x(), q.y(), q.z());
    if (qv.dot(q_sum) < 0.0) qv = -qv;
    q_sum += qv;
    t_sum += z.translation();
  }
  q_sum.normalize();
  const Eigen::Quaterniond q_avg(q_sum[0], q_sum[1], q_sum[2], q_sum[3]);
  result.base_H_cal = RigidTransform(q_avg.toRotationMatrix(),
                                     t_sum / static_cast<double>(chains.size()));

  double sq = 0.0;
  for (const RigidTransform& z : chains) {
    sq += z.translation_distance_to(result.base_H_cal) *
          z.translation_distance_to(result.base_H_cal);
  }
  result.residual = std::sqrt(sq / static_cast<double>(chains.size()));
  return result;
}

}  // namespace sheetloc
