#pragma once

#include "sheetloc/core/match_result.hpp"
#include "sheetloc/match2d/shape_match.hpp"
#include "sheetloc/refine/plane.hpp"

namespace sheetloc {

/// Lifts a planar match on a contrast depth image to a full 6D pose:
/// in-plane position and rotation from the match, height from the median
/// image depth over the part's pixels (so a stacked part locks to its top
/// face), and out-of-plane orientation from the support plane.
///
/// The support plane is expressed in the same frame as the cloud the image
/// was made from, and the returned pose maps the model frame into that
/// cloud frame (via the image's cam_pose).
inline MatchResult lift_to_6d(const PlanarMatch& pm, const DepthImage& img,
                              const Plane& support, const WorkpieceModel& m,
                              std::size_t min_depth_pixels = 5) {
  if (img.kind != ImageKind::intensity ||
      img.projection != ProjectionKind::orthographic || !img.cam_pose) {
    throw WrongImageKind(
        "lift_to_6d: expected an orthographic contrast depth image");
  }
  m.validate();

  // Part pixels: the outline rotated by theta around the match position.
  const std::vector<Vec2> poly = m.ccw_outline();
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& v : poly) centroid += v;
  centroid /= static_cast<double>(poly.size());
  const double c = std::cos(deg_to_rad(pm.theta_deg));
  const double s = std::sin(deg_to_rad(pm.theta_deg));
  std::vector<Vec2> poly_px;
  poly_px.reserve(poly.size());
  double u_min = 1e18, u_max = -1e18, v_min = 1e18, v_max = -1e18;
  for (const Vec2& p : poly) {
    const Vec2 q = p - centroid;
    const Vec2 px(pm.u + (c * q.x() - s * q.y()) / img.mm_per_px,
                  pm.v + (s * q.x() + c * q.y()) / img.mm_per_px);
    poly_px.push_back(px);
    u_min = std::min(u_min, px.x());
    u_max = std::max(u_max, px.x());
    v_min = std::min(v_min, px.y());
    v_max = std::max(v_max, px.y());
  }

  std::vector<double> heights;
  for (int y = std::max(0, static_cast<int>(std::floor(v_min)));
       y <= std::min(img.height - 1, static_cast<int>(std::ceil(v_max)));
       ++y) {
    for (int x = std::max(0, static_cast<int>(std::floor(u_min)));
         x <= std::min(img.width - 1, static_cast<int>(std::ceil(u_max)));
         ++x) {
      if (!img.is_valid(x, y)) continue;
      if (!polygon::point_inside(poly_px, Vec2(x + 0.5, y + 0.5))) continue;
      heights.push_back(img.depth_mm(x, y));
    }
  }
  if (heights.size() < min_depth_pixels) {
    throw InsufficientDepthPixels("lift_to_6d: only " +
                                  std::to_string(heights.size()) +
                                  " valid part pixels");
  }
  std::nth_element(heights.begin(), heights.begin() + heights.size() / 2,
                   heights.end());
  const double h_top = heights[heights.size() / 2];

  // Grid-frame pose: in-plane rotation, tilt from the support plane, and
  // the model origin placed so its outline centroid sits at the match.
  const RigidTransform& grid_pose = *img.cam_pose;
  Vec3 n_grid = grid_pose.inverse().rotate(support.normal);
  if (n_grid.z() < 0.0) n_grid = -n_grid;
  const Mat3 tilt =
      Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), n_grid)
          .toRotationMatrix();
  const Mat3 rot_inplane =
      Eigen::AngleAxisd(deg_to_rad(pm.theta_deg), Vec3::UnitZ())
          .toRotationMatrix();
  const Mat3 rot = tilt * rot_inplane;

  // Model origin: centroid maps to the match pixel at the top-face height;
  // the model's top face lies at +thickness/2 in its own frame.
  const Vec3 centroid_grid((pm.u + 0.5) * img.mm_per_px,
                           (pm.v + 0.5) * img.mm_per_px,
                           h_top - m.thickness / 2.0);
  const Vec3 origin_grid =
      centroid_grid - rot * Vec3(centroid.x(), centroid.y(), 0.0);

  MatchResult out;
  out.model_id = pm.model_id.empty() ? m.id : pm.model_id;
  out.pose = grid_pose * RigidTransform(rot, origin_grid);
  out.score = pm.score;
  return out;
}

}  // namespace sheetloc
