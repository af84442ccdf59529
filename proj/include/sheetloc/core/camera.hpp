#pragma once

#include "sheetloc/core/error.hpp"
#include "sheetloc/core/transform.hpp"

namespace sheetloc {

/// Pinhole model of a depth camera. Pixel coordinates are continuous with
/// pixel (i, j) covering [i, i+1) x [j, j+1); rays are cast through pixel
/// centers (i + 0.5, j + 0.5).
struct CameraModel {
  double focal_length_px = 500.0;
  Vec2 principal_point = Vec2(160.0, 120.0);
  int width = 320;
  int height = 240;
  /// Scanning distance limits along the optical axis, millimetres.
  double z_min = 200.0;
  double z_max = 3000.0;

  void validate() const {
    if (focal_length_px <= 0.0) {
      throw InvalidArgument("camera focal length must be positive");
    }
    if (!(z_min < z_max)) {
      throw InvalidArgument("camera z_range must satisfy min < max");
    }
    if (width <= 0 || height <= 0) {
      throw InvalidArgument("camera resolution must be positive");
    }
  }

  /// Camera-frame ray direction through image point (u, v), scaled so the
  /// z component is 1: a point at depth z lies at z * pixel_ray(u, v).
  Vec3 pixel_ray(double u, double v) const {
    return Vec3((u - principal_point.x()) / focal_length_px,
                (v - principal_point.y()) / focal_length_px, 1.0);
  }

  /// Projects a camera-frame point to continuous image coordinates.
  Vec2 project(const Vec3& p_cam) const {
    return Vec2(p_cam.x() / p_cam.z() * focal_length_px + principal_point.x(),
                p_cam.y() / p_cam.z() * focal_length_px + principal_point.y());
  }

  bool in_image(const Vec2& uv) const {
    return uv.x() >= 0.0 && uv.x() < width && uv.y() >= 0.0 && uv.y() < height;
  }

  bool in_range(double z) const { return z >= z_min && z <= z_max; }
};

}  // namespace sheetloc
