#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sheetloc/core/error.hpp"
#include "sheetloc/core/transform.hpp"

namespace sheetloc {

/// Ordered set of 3D points with optional per-point unit normals and
/// intensities in [0, 1]. Optional channels are either empty or exactly as
/// long as `points`. Coordinates in millimetres.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<double> intensities;
  std::string frame_id = "camera";

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }
  bool has_intensities() const { return !intensities.empty(); }

  void validate() const {
    if (has_normals() && normals.size() != points.size()) {
      throw InvalidArgument("normal channel length mismatch");
    }
    if (has_intensities() && intensities.size() != points.size()) {
      throw InvalidArgument("intensity channel length mismatch");
    }
    for (const Vec3& p : points) {
      if (!p.allFinite()) throw InvalidArgument("non-finite point coordinate");
    }
    for (const Vec3& n : normals) {
      if (std::abs(n.norm() - 1.0) > 1e-6) {
        throw InvalidArgument("normal is not unit length");
      }
    }
  }

  void reserve(std::size_t n) {
    points.reserve(n);
    if (has_normals()) normals.reserve(n);
    if (has_intensities()) intensities.reserve(n);
  }

  /// Copies point i of `src` (with whatever channels it has) onto the back.
  void push_from(const PointCloud& src, std::size_t i) {
    points.push_back(src.points[i]);
    if (src.has_normals()) normals.push_back(src.normals[i]);
    if (src.has_intensities()) intensities.push_back(src.intensities[i]);
  }
};

/// Rigidly transforms a cloud: points rotated + translated, normals rotated,
/// intensities untouched. `new_frame_id` names the destination frame.
inline PointCloud apply(const RigidTransform& t, const PointCloud& c,
                        const std::string& new_frame_id = "") {
  PointCloud out;
  out.frame_id = new_frame_id.empty() ? c.frame_id : new_frame_id;
  out.points.reserve(c.points.size());
  for (const Vec3& p : c.points) out.points.push_back(t * p);
  out.normals.reserve(c.normals.size());
  for (const Vec3& n : c.normals) out.normals.push_back(t.rotate(n));
  out.intensities = c.intensities;
  return out;
}

}  // namespace sheetloc
