#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "sheetloc/core/error.hpp"

namespace sheetloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Nearest rotation matrix in the Frobenius sense (polar factor).
inline Mat3 project_to_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

/// Rigid 6-DoF pose: p' = rotation * p + translation. Millimetres.
///
/// The rotation is kept orthonormal with determinant +1. Long composition
/// chains are re-orthonormalised via polar decomposition every
/// kRenormalizeEvery multiplications, so drift stays below 1e-9 regardless
/// of chain length.
class RigidTransform {
 public:
  static constexpr int kRenormalizeEvery = 32;
  static constexpr double kOrthoTolerance = 1e-9;

  RigidTransform() = default;

  RigidTransform(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {
    const double ortho_err =
        (rotation_.transpose() * rotation_ - Mat3::Identity()).norm();
    const double det_err = std::abs(rotation_.determinant() - 1.0);
    if (ortho_err > 1e-6 || det_err > 1e-6) {
      throw InvalidTransform("rotation is not orthonormal with det +1");
    }
    if (ortho_err > kOrthoTolerance || det_err > kOrthoTolerance) {
      rotation_ = project_to_rotation(rotation_);
    }
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  static RigidTransform identity() { return RigidTransform(); }

  static RigidTransform from_translation(const Vec3& t) {
    RigidTransform out;
    out.translation_ = t;
    return out;
  }

  static RigidTransform from_axis_angle(const Vec3& axis, double angle_deg,
                                        const Vec3& t = Vec3::Zero()) {
    Eigen::AngleAxisd aa(deg_to_rad(angle_deg), axis.normalized());
    RigidTransform out;
    out.rotation_ = aa.toRotationMatrix();
    out.translation_ = t;
    return out;
  }

  static RigidTransform rot_x(double deg) {
    return from_axis_angle(Vec3::UnitX(), deg);
  }
  static RigidTransform rot_y(double deg) {
    return from_axis_angle(Vec3::UnitY(), deg);
  }
  static RigidTransform rot_z(double deg) {
    return from_axis_angle(Vec3::UnitZ(), deg);
  }

  static RigidTransform from_matrix(const Mat4& m) {
    return RigidTransform(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
  }

  Mat4 to_matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  /// Applies this transform after `other` (this * other).
  RigidTransform operator*(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation_ = rotation_ * other.rotation_;
    out.translation_ = rotation_ * other.translation_ + translation_;
    out.chain_depth_ = chain_depth_ + other.chain_depth_ + 1;
    if (out.chain_depth_ >= kRenormalizeEvery) {
      out.renormalize();
    }
    return out;
  }

  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }

  /// Rotates a direction vector (no translation).
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

  RigidTransform inverse() const {
    RigidTransform out;
    out.rotation_ = rotation_.transpose();
    out.translation_ = -(out.rotation_ * translation_);
    out.chain_depth_ = chain_depth_;
    return out;
  }

  void renormalize() {
    rotation_ = project_to_rotation(rotation_);
    chain_depth_ = 0;
  }

  /// Angle of the relative rotation to `other`, in degrees. Computed via
  /// angle-axis, which stays accurate near identity where acos(trace)
  /// loses digits.
  double rotation_angle_to(const RigidTransform& other) const {
    const Mat3 rel = rotation_.transpose() * other.rotation_;
    return rad_to_deg(Eigen::AngleAxisd(rel).angle());
  }

  double translation_distance_to(const RigidTransform& other) const {
    return (translation_ - other.translation_).norm();
  }

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
  int chain_depth_ = 0;
};

inline RigidTransform compose(const RigidTransform& a,
                              const RigidTransform& b) {
  return a * b;
}

/// Rotation angle of a single rotation matrix, degrees.
inline double rotation_angle_deg(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

}  // namespace sheetloc
