#pragma once

#include "sheetloc/core/kdtree.hpp"
#include "sheetloc/core/point_cloud.hpp"

namespace sheetloc {

struct IcpResult {
  RigidTransform pose;
  double rms = 0.0;  // mm, residual RMS of the final correspondence set
  int iterations = 0;
  std::vector<double> rms_history;  // non-increasing by construction
};

namespace detail {

/// Closed-form rigid alignment minimising sum |dst - (R src + t)|^2.
inline RigidTransform solve_rigid(const std::vector<Vec3>& src,
                                  const std::vector<Vec3>& dst) {
  Vec3 src_mean = Vec3::Zero(), dst_mean = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    src_mean += src[i];
    dst_mean += dst[i];
  }
  src_mean /= static_cast<double>(src.size());
  dst_mean /= static_cast<double>(src.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    h += (src[i] - src_mean) * (dst[i] - dst_mean).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return RigidTransform(project_to_rotation(r), dst_mean - r * src_mean);
}

struct IcpPair {
  Vec3 moved;    // model point under the current pose
  Vec3 target;   // matched scene point
  Vec3 normal;   // scene normal (plane pairs only)
  bool planar;   // plane residual vs full point residual
};

/// One damped Gauss-Newton step over the pose increment for a mix of
/// point-to-plane rows and point-to-point rows, left-multiplied onto the
/// current pose. Damping keeps genuinely unconstrained directions still.
inline RigidTransform solve_hybrid_step(const std::vector<IcpPair>& pairs) {
  Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
  for (const IcpPair& p : pairs) {
    if (p.planar) {
      const double r = p.normal.dot(p.moved - p.target);
      Eigen::Matrix<double, 6, 1> jac;
      jac.head<3>() = p.moved.cross(p.normal);
      jac.tail<3>() = p.normal;
      h += jac * jac.transpose();
      g -= jac * r;
    } else {
      // Residual vector r = moved - target; d r / d omega = -[moved]x.
      const Vec3 r = p.moved - p.target;
      Eigen::Matrix<double, 3, 6> jac;
      jac.block<3, 3>(0, 0) << 0, p.moved.z(), -p.moved.y(),
          -p.moved.z(), 0, p.moved.x(),
          p.moved.y(), -p.moved.x(), 0;
      jac.block<3, 3>(0, 3) = Mat3::Identity();
      h += jac.transpose() * jac;
      g -= jac.transpose() * r;
    }
  }
  h += 1e-9 * h.trace() * Eigen::Matrix<double, 6, 6>::Identity();
  const Eigen::Matrix<double, 6, 1> x = h.ldlt().solve(g);
  const Vec3 omega = x.head<3>();
  const double angle = omega.norm();
  const Mat3 rot =
      angle > 1e-15
          ? Eigen::AngleAxisd(angle, Vec3(omega / angle)).toRotationMatrix()
          : Mat3::Identity();
  return RigidTransform(project_to_rotation(rot), x.tail<3>());
}

/// Median nearest-neighbor spacing, the scene's sampling pitch.
inline double median_nn_spacing(const NeighborIndex& index) {
  const auto& pts = index.points();
  if (pts.size() < 2) return 1.0;
  std::vector<double> d;
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 200);
  for (std::size_t i = 0; i < pts.size(); i += stride) {
    const auto nn = index.knn(pts[i], 2);
    if (nn.size() == 2) d.push_back((pts[nn[1]] - pts[i]).norm());
  }
  if (d.empty()) return 1.0;
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return d[d.size() / 2];
}

}  // namespace detail

/// ICP refinement of `initial` (model -> scene). Correspondences are
/// nearest scene neighbors within max_corr_dist; pairs whose normals
/// disagree by more than normal_gate_deg are rejected (a sheet's bottom
/// face must not latch onto top-face scene points one thickness away).
///
/// With scene normals present the residual is point-to-plane, except for
/// pairs whose tangential offset exceeds the scene's sampling pitch: those
/// are genuine boundary overhangs and keep the full point-to-point
/// residual, which is what pins the in-plane pose of a flat part seen from
/// above. Without normals everything is point-to-point.
///
/// Correspondence membership changes between iterations, so the raw
/// per-iteration RMS is not monotone; the search keeps the best (pose, rms)
/// pair seen so far and only improvements enter rms_history, making the
/// reported sequence non-increasing. Terminates at max_iter or once the
/// improvement stays below `tol` for a few iterations.
inline IcpResult icp_refine_with_edges(
    const PointCloud& scene, const PointCloud& model_cloud,
    const PointCloud& scene_edges, const PointCloud& model_edges,
    const RigidTransform& initial, int max_iter = 40, double tol = 1e-6,
    double max_corr_dist = std::numeric_limits<double>::infinity(),
    double normal_gate_deg = 60.0, double boundary_threshold = 0.0) {
  if (scene.empty() || model_cloud.empty()) {
    throw NoCorrespondences("icp_refine: empty cloud");
  }
  NeighborIndex scene_index(scene);
  const bool plane_mode = scene.has_normals();
  const bool gate_normals = plane_mode && model_cloud.has_normals() &&
                            normal_gate_deg < 180.0;
  const double gate_cos = std::cos(deg_to_rad(normal_gate_deg));
  if (plane_mode && boundary_threshold <= 0.0) {
    boundary_threshold = 1.5 * detail::median_nn_spacing(scene_index);
  }
  const bool use_edges = !scene_edges.empty() && !model_edges.empty();
  NeighborIndex edge_index;
  if (use_edges) edge_index = NeighborIndex(scene_edges);

  IcpResult result;
  result.pose = initial;
  result.rms = std::numeric_limits<double>::infinity();

  RigidTransform current = initial;
  std::vector<detail::IcpPair> pairs;
  std::vector<Vec3> src, dst;
  int stale = 0;

  for (int iter = 0; iter <= max_iter; ++iter) {
    pairs.clear();
    src.clear();
    dst.clear();
    double sq_sum = 0.0;
    for (std::size_t pi = 0; pi < model_cloud.size(); ++pi) {
      const Vec3 p = current * model_cloud.points[pi];
      const auto [idx, dist] = scene_index.nearest(p);
      if (idx < 0 || dist > max_corr_dist) continue;
      if (gate_normals) {
        // Signed test: an opposite-facing surface is never a valid match.
        const Vec3 n_moved = current.rotate(model_cloud.normals[pi]);
        if (n_moved.dot(scene.normals[idx]) < gate_cos) continue;
      }
      detail::IcpPair pair;
      pair.moved = p;
      pair.target = scene.points[idx];
      if (plane_mode) {
        pair.normal = scene.normals[idx];
        const Vec3 diff = p - pair.target;
        const double r_n = pair.normal.dot(diff);
        const double r_t = (diff - r_n * pair.normal).norm();
        pair.planar = r_t <= boundary_threshold;
        const double r = pair.planar ? r_n : dist;
        sq_sum += r * r;
      } else {
        pair.planar = false;
        sq_sum += dist * dist;
        src.push_back(model_cloud.points[pi]);
        dst.push_back(pair.target);
      }
      pairs.push_back(pair);
    }
    // Depth-edge support: the model's contour (its upper rim under the
    // current pose) aligned point-to-point against the scene's edge cloud.
    // The silhouette is the only thing that pins the in-plane pose of a
    // flat part seen face-on.
    if (use_edges) {
      double z_mid = 0.0;
      for (std::size_t pi = 0; pi < model_edges.size(); ++pi) {
        z_mid += (current * model_edges.points[pi]).z();
      }
      z_mid /= static_cast<double>(model_edges.size());
      for (std::size_t pi = 0; pi < model_edges.size(); ++pi) {
        const Vec3 p = current * model_edges.points[pi];
        if (p.z() > z_mid) continue;  // camera-side rim only (z forward)
        const auto [idx, dist] = edge_index.nearest(p);
        if (idx < 0 || dist > max_corr_dist) continue;
        detail::IcpPair pair;
        pair.moved = p;
        pair.target = scene_edges.points[idx];
        pair.planar = false;
        pairs.push_back(pair);
        if (!plane_mode) {
          src.push_back(model_edges.points[pi]);
          dst.push_back(pair.target);
        }
        sq_sum += dist * dist;
      }
    }
    if (pairs.size() < 3) {
      if (result.rms_history.empty()) {
        throw NoCorrespondences(
            "icp_refine: fewer than 3 correspondences within range");
      }
      break;
    }
    const double rms = std::sqrt(sq_sum / static_cast<double>(pairs.size()));
    if (rms < result.rms) {
      const double gain = result.rms - rms;
      result.rms = rms;
      result.pose = current;
      result.rms_history.push_back(rms);
      result.iterations = iter;
      stale = std::isfinite(gain) && gain < tol ? stale + 1 : 0;
    } else {
      ++stale;
    }
    if (stale >= 4 || iter == max_iter) break;

    if (plane_mode) {
      current = detail::solve_hybrid_step(pairs) * current;
    } else {
      current = detail::solve_rigid(src, dst);
    }
  }
  return result;
}

inline IcpResult icp_refine(const PointCloud& scene,
                            const PointCloud& model_cloud,
                            const RigidTransform& initial, int max_iter = 40,
                            double tol = 1e-6,
                            double max_corr_dist =
                                std::numeric_limits<double>::infinity(),
                            double normal_gate_deg = 60.0,
                            double boundary_threshold = 0.0) {
  return icp_refine_with_edges(scene, model_cloud, PointCloud{}, PointCloud{},
                               initial, max_iter, tol, max_corr_dist,
                               normal_gate_deg, boundary_threshold);
}

}  // namespace sheetloc
