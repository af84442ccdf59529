#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "sheetloc/core/camera.hpp"
#include "sheetloc/core/error.hpp"
#include "sheetloc/core/transform.hpp"

namespace sheetloc {

enum class ImageKind { depth, intensity };
enum class ProjectionKind { perspective, orthographic };

/// Rectangular grid of scalars: depth in millimetres or intensity in [0, 1].
/// Invalid pixels are tracked by an explicit mask and excluded from every
/// statistic; files encode them as a sentinel.
///
/// Two projection geometries exist:
///  - perspective: produced by the scene renderer. `values` hold camera-frame
///    z depth; pixel (i, j) back-projects along camera.pixel_ray(i+.5, j+.5).
///  - orthographic: produced by projecting a cloud along an axis. Pixel
///    (i, j) with value d maps to grid-frame point
///    ((i+.5)*mm_per_px, (j+.5)*mm_per_px, d); `cam_pose` places the grid
///    frame in the cloud's frame.
///
/// Intensity images carry (depth_offset, depth_scale) so the underlying
/// distance in mm is recoverable: mm = depth_offset + value * depth_scale.
struct DepthImage {
  int width = 0;
  int height = 0;
  ImageKind kind = ImageKind::depth;
  ProjectionKind projection = ProjectionKind::perspective;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;
  CameraModel camera;
  double mm_per_px = 0.0;
  std::optional<RigidTransform> cam_pose;
  double depth_offset = 0.0;
  double depth_scale = 1.0;

  static DepthImage make(int w, int h, ImageKind k) {
    DepthImage img;
    img.width = w;
    img.height = h;
    img.kind = k;
    img.values.assign(static_cast<std::size_t>(w) * h,
                      std::numeric_limits<double>::quiet_NaN());
    img.valid.assign(static_cast<std::size_t>(w) * h, 0);
    return img;
  }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  double at(int x, int y) const { return values[index(x, y)]; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }

  void set(int x, int y, double v) {
    values[index(x, y)] = v;
    valid[index(x, y)] = 1;
  }
  void invalidate(int x, int y) {
    values[index(x, y)] = std::numeric_limits<double>::quiet_NaN();
    valid[index(x, y)] = 0;
  }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v;
    return n;
  }

  /// Millimetre reading of a pixel regardless of kind.
  double depth_mm(int x, int y) const {
    const double v = at(x, y);
    return kind == ImageKind::depth ? v : depth_offset + v * depth_scale;
  }

  /// Back-projects a valid pixel into the image's parent frame (perspective:
  /// camera frame; orthographic: grid frame unless cam_pose maps it out).
  Vec3 back_project(int x, int y) const {
    const double v = depth_mm(x, y);
    if (projection == ProjectionKind::perspective) {
      return v * camera.pixel_ray(x + 0.5, y + 0.5);
    }
    Vec3 grid((x + 0.5) * mm_per_px, (y + 0.5) * mm_per_px, v);
    return cam_pose ? (*cam_pose) * grid : grid;
  }

  /// Direction of sight through a pixel, unit length, in the parent frame.
  Vec3 view_direction(int x, int y) const {
    if (projection == ProjectionKind::perspective) {
      return camera.pixel_ray(x + 0.5, y + 0.5).normalized();
    }
    return cam_pose ? cam_pose->rotate(Vec3::UnitZ()) : Vec3(0, 0, 1);
  }
};

}  // namespace sheetloc
