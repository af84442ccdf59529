#pragma once

#include <string>
#include <vector>

#include "sheetloc/core/point_cloud.hpp"

namespace sheetloc {

namespace polygon {

inline double signed_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

inline double perimeter(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    s += (poly[(i + 1) % poly.size()] - poly[i]).norm();
  }
  return s;
}

inline bool point_inside(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

inline bool segments_properly_intersect(const Vec2& p1, const Vec2& p2,
                                        const Vec2& q1, const Vec2& q2) {
  const double d1 = cross2(p2 - p1, q1 - p1);
  const double d2 = cross2(p2 - p1, q2 - p1);
  const double d3 = cross2(q2 - q1, p1 - q1);
  const double d4 = cross2(q2 - q1, p2 - q1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace detail

/// True when the closed polygon has no proper self-intersection between
/// non-adjacent edges.
inline bool is_simple(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip adjacent edges (they share an endpoint).
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (detail::segments_properly_intersect(poly[i], poly[(i + 1) % n],
                                              poly[j], poly[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace polygon

/// Extruded planar part standing in for a sheet-metal CAD model: a simple
/// outline polygon (mm) swept over z in [-thickness/2, +thickness/2].
struct WorkpieceModel {
  std::string id;
  std::vector<Vec2> outline;
  double thickness = 1.0;
  PointCloud sampled_cloud;
  PointCloud edge_cloud;

  void validate() const {
    if (outline.size() < 3 || !polygon::is_simple(outline) ||
        std::abs(polygon::signed_area(outline)) < 1e-9) {
      throw DegeneratePolygon("workpiece outline is not a simple polygon");
    }
    if (thickness <= 0.0) {
      throw DegeneratePolygon("workpiece thickness must be positive");
    }
  }

  /// Outline in counter-clockwise order (positive signed area).
  std::vector<Vec2> ccw_outline() const {
    std::vector<Vec2> out = outline;
    if (polygon::signed_area(out) < 0.0) {
      std::reverse(out.begin(), out.end());
    }
    return out;
  }

  double diameter() const {
    double best = 0.0;
    for (std::size_t i = 0; i < outline.size(); ++i) {
      for (std::size_t j = i + 1; j < outline.size(); ++j) {
        best = std::max(best, (outline[i] - outline[j]).norm());
      }
    }
    return std::sqrt(best * best + thickness * thickness);
  }
};

/// Samples the extruded surface (top, bottom, side walls) on a quasi-uniform
/// grid of pitch `step` with outward unit normals. At least the 8 extruded
/// corner points of the outline's bounding box are always emitted.
inline PointCloud sample_model(const WorkpieceModel& m, double step) {
  if (step <= 0.0) throw InvalidArgument("sample step must be positive");
  m.validate();
  const std::vector<Vec2> poly = m.ccw_outline();
  const double half = m.thickness / 2.0;

  PointCloud out;
  out.frame_id = "model";

  Vec2 lo = poly[0], hi = poly[0];
  for (const Vec2& v : poly) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }

  // Top and bottom faces.
  for (double y = lo.y() + step / 2; y <= hi.y(); y += step) {
    for (double x = lo.x() + step / 2; x <= hi.x(); x += step) {
      if (!polygon::point_inside(poly, Vec2(x, y))) continue;
      out.points.emplace_back(x, y, half);
      out.normals.push_back(Vec3::UnitZ());
      out.points.emplace_back(x, y, -half);
      out.normals.push_back(-Vec3::UnitZ());
    }
  }

  // Side walls: outward normal of a CCW polygon edge (dx, dy) is (dy, -dx).
  const int z_rows = std::max(1, static_cast<int>(std::ceil(m.thickness / step)));
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const double len = (b - a).norm();
    if (len < 1e-12) continue;
    const Vec2 dir = (b - a) / len;
    const Vec2 outward(dir.y(), -dir.x());
    const int n_along = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int s = 0; s < n_along; ++s) {
      const double t = (s + 0.5) / n_along * len;
      const Vec2 q = a + dir * t;
      for (int r = 0; r < z_rows; ++r) {
        const double z = -half + (r + 0.5) / z_rows * m.thickness;
        out.points.emplace_back(q.x(), q.y(), z);
        out.normals.emplace_back(outward.x(), outward.y(), 0.0);
      }
    }
  }

  // Corner floor: the extruded outline vertices of the bounding box region.
  if (out.size() < 8) {
    out.points.clear();
    out.normals.clear();
    for (const Vec2& v : {Vec2(lo.x(), lo.y()), Vec2(hi.x(), lo.y()),
                          Vec2(hi.x(), hi.y()), Vec2(lo.x(), hi.y())}) {
      for (double z : {-half, half}) {
        out.points.emplace_back(v.x(), v.y(), z);
        out.normals.push_back(Vec3(0.0, 0.0, z > 0 ? 1.0 : -1.0));
      }
    }
  }
  return out;
}

/// Samples the outline contour at pitch `step` along both the top and bottom
/// rims; the normals channel carries the outward in-plane edge direction.
inline PointCloud sample_model_edges(const WorkpieceModel& m, double step) {
  if (step <= 0.0) throw InvalidArgument("sample step must be positive");
  m.validate();
  const std::vector<Vec2> poly = m.ccw_outline();
  const double half = m.thickness / 2.0;
  PointCloud out;
  out.frame_id = "model";
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const double len = (b - a).norm();
    if (len < 1e-12) continue;
    const Vec2 dir = (b - a) / len;
    const Vec2 outward(dir.y(), -dir.x());
    const int n_along = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int s = 0; s < n_along; ++s) {
      const double t = (s + 0.5) / n_along * len;
      const Vec2 q = a + dir * t;
      for (double z : {half, -half}) {
        out.points.emplace_back(q.x(), q.y(), z);
        out.normals.emplace_back(outward.x(), outward.y(), 0.0);
      }
    }
  }
  return out;
}

/// Fills sampled_cloud and edge_cloud in place.
inline void prepare_model(WorkpieceModel& m, double step) {
  m.sampled_cloud = sample_model(m, step);
  m.edge_cloud = sample_model_edges(m, step);
}

}  // namespace sheetloc
