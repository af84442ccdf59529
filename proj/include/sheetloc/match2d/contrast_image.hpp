#pragma once

#include "sheetloc/core/depth_image.hpp"
#include "sheetloc/core/point_cloud.hpp"

namespace sheetloc {

struct ContrastImageOptions {
  /// Height range mapped onto [0, 1]; NaN picks the range from the data.
  double z_min = std::numeric_limits<double>::quiet_NaN();
  double z_max = std::numeric_limits<double>::quiet_NaN();
  /// Passes of hole filling: an empty pixel with 5+ valid 8-neighbors takes
  /// their mean. Closes the binning gaps left when the cloud's point pitch
  /// exceeds mm_per_px.
  int fill_passes = 2;
};

/// Contrast-enhanced depth image for shape matching: the cloud is expressed
/// in the scene frame and flattened along the scene's normal (+z), each
/// pixel keeping the height of the topmost point. Intensity is linear in
/// that height — white foreground, black background — so a tilted camera
/// still renders a flat part top as one uniform grey. The mm mapping is
/// kept in (depth_offset, depth_scale); depth_mm() returns scene-frame
/// height.
///
/// `scene_frame` is the pose of the scene frame within the cloud's frame
/// (cam_H_scene for a camera-frame cloud, e.g. from plate referencing).
inline DepthImage make_contrast_depth_image(
    const PointCloud& c, const RigidTransform& scene_frame, double mm_per_px,
    const ContrastImageOptions& opt = {}) {
  if (c.empty()) throw EmptyCloud("make_contrast_depth_image: empty cloud");
  if (mm_per_px <= 0.0) throw InvalidArgument("mm_per_px must be positive");

  const RigidTransform to_scene = scene_frame.inverse();
  std::vector<Vec3> scene_pts;
  scene_pts.reserve(c.size());
  double x_min = std::numeric_limits<double>::infinity();
  double y_min = x_min, x_max = -x_min, y_max = -x_min;
  double h_min = x_min, h_max = -x_min;
  for (const Vec3& p : c.points) {
    const Vec3 s = to_scene * p;
    scene_pts.push_back(s);
    x_min = std::min(x_min, s.x());
    x_max = std::max(x_max, s.x());
    y_min = std::min(y_min, s.y());
    y_max = std::max(y_max, s.y());
    h_min = std::min(h_min, s.z());
    h_max = std::max(h_max, s.z());
  }
  const double z_lo = std::isnan(opt.z_min) ? h_min : opt.z_min;
  const double z_hi = std::isnan(opt.z_max) ? h_max : opt.z_max;
  const double span = z_hi > z_lo ? z_hi - z_lo : 1.0;

  const int width =
      static_cast<int>(std::floor((x_max - x_min) / mm_per_px)) + 1;
  const int height =
      static_cast<int>(std::floor((y_max - y_min) / mm_per_px)) + 1;
  DepthImage img = DepthImage::make(width, height, ImageKind::intensity);
  img.projection = ProjectionKind::orthographic;
  img.mm_per_px = mm_per_px;
  img.depth_offset = z_lo;
  img.depth_scale = span;
  img.cam_pose =
      scene_frame * RigidTransform::from_translation(Vec3(x_min, y_min, 0.0));

  // Keep per-pixel the topmost height (closest to an overhead camera).
  std::vector<double> top(static_cast<std::size_t>(width) * height,
                          -std::numeric_limits<double>::infinity());
  for (const Vec3& s : scene_pts) {
    const int x = std::min(
        width - 1, static_cast<int>(std::floor((s.x() - x_min) / mm_per_px)));
    const int y = std::min(
        height - 1, static_cast<int>(std::floor((s.y() - y_min) / mm_per_px)));
    top[img.index(x, y)] = std::max(top[img.index(x, y)], s.z());
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double h = top[img.index(x, y)];
      if (!std::isfinite(h)) continue;
      img.set(x, y, std::clamp((h - z_lo) / span, 0.0, 1.0));
    }
  }

  for (int pass = 0; pass < opt.fill_passes; ++pass) {
    const DepthImage snapshot = img;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (snapshot.is_valid(x, y)) continue;
        double sum = 0.0;
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if ((dx == 0 && dy == 0) || !snapshot.in_bounds(nx, ny) ||
                !snapshot.is_valid(nx, ny)) {
              continue;
            }
            sum += snapshot.at(nx, ny);
            ++n;
          }
        }
        if (n >= 5) img.set(x, y, sum / n);
      }
    }
  }
  return img;
}

}  // namespace sheetloc
