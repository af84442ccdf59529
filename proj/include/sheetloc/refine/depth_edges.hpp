#pragma once

#include "sheetloc/core/depth_image.hpp"
#include "sheetloc/core/point_cloud.hpp"

namespace sheetloc {

/// Extracts depth discontinuities as a 3D edge cloud. A pixel is an edge
/// when the depth amplitude (max - min) over its valid 8-neighborhood
/// reaches min_amplitude and the pixel sits on the near side of the jump,
/// so each step contributes a single line of points along the foreground
/// contour. Edge points are back-projected; the normals channel carries the
/// per-point viewing direction.
inline PointCloud extract_depth_edges(const DepthImage& img,
                                      double min_amplitude) {
  if (img.kind != ImageKind::depth) {
    throw WrongImageKind("extract_depth_edges: expected a depth image");
  }
  if (min_amplitude <= 0.0) {
    throw InvalidArgument("extract_depth_edges: min_amplitude <= 0");
  }

  PointCloud edges;
  edges.frame_id = "image";
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!img.is_valid(x, y)) continue;
      const double center = img.at(x, y);
      double lo = center, hi = center;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (!img.in_bounds(nx, ny) || !img.is_valid(nx, ny)) continue;
          const double v = img.at(nx, ny);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      const double amplitude = hi - lo;
      if (amplitude < min_amplitude) continue;
      if (center - lo > 0.5 * amplitude) continue;  // far side of the jump
      edges.points.push_back(img.back_project(x, y));
      edges.normals.push_back(img.view_direction(x, y));
    }
  }
  return edges;
}

}  // namespace sheetloc
