#pragma once

#include <random>

#include "sheetloc/core/cloud_ops.hpp"
#include "sheetloc/core/point_cloud.hpp"

namespace sheetloc {

/// Infinite plane {p : normal . p = offset}, normal unit length.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  std::size_t inlier_count = 0;

  double distance(const Vec3& p) const {
    return std::abs(normal.dot(p) - offset);
  }
};

/// Least-squares plane through a subset of points (PCA fit).
inline Plane fit_plane_lsq(const std::vector<Vec3>& points,
                           const std::vector<int>& subset) {
  Vec3 mean = Vec3::Zero();
  for (int i : subset) mean += points[i];
  mean /= static_cast<double>(subset.size());
  Mat3 cov = Mat3::Zero();
  for (int i : subset) {
    const Vec3 d = points[i] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Plane plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.offset = plane.normal.dot(mean);
  plane.inlier_count = subset.size();
  return plane;
}

struct RansacOptions {
  unsigned seed = 1;
  int max_iterations = 1000;   // cap; usually cut short adaptively
  double success_probability = 0.999;
  int refine_rounds = 2;
};

/// Greedy iterative plane extraction: RANSAC-fit the dominant plane on the
/// remaining points, refine it by least squares over its inliers, remove
/// them, repeat until `max_planes` planes are found or fewer than
/// `min_inliers` points remain. Deterministic for a fixed seed.
inline std::vector<Plane> fit_planes_ransac(const PointCloud& c,
                                            double dist_tol,
                                            std::size_t min_inliers,
                                            std::size_t max_planes,
                                            const RansacOptions& opt = {}) {
  if (dist_tol <= 0.0) throw InvalidArgument("dist_tol must be positive");
  std::vector<Plane> planes;
  if (c.empty() || max_planes == 0) return planes;
  min_inliers = std::max<std::size_t>(min_inliers, 3);

  std::mt19937 rng(opt.seed);
  std::vector<int> remaining(c.size());
  std::iota(remaining.begin(), remaining.end(), 0);

  while (planes.size() < max_planes && remaining.size() >= min_inliers) {
    const int n = static_cast<int>(remaining.size());
    std::uniform_int_distribution<int> pick(0, n - 1);

    Plane best;
    std::size_t best_count = 0;
    int needed = opt.max_iterations;
    for (int iter = 0; iter < needed && iter < opt.max_iterations; ++iter) {
      const int a = remaining[pick(rng)];
      const int b = remaining[pick(rng)];
      const int d = remaining[pick(rng)];
      if (a == b || a == d || b == d) continue;
      const Vec3 cross =
          (c.points[b] - c.points[a]).cross(c.points[d] - c.points[a]);
      if (cross.norm() < 1e-9) continue;
      Plane cand;
      cand.normal = cross.normalized();
      cand.offset = cand.normal.dot(c.points[a]);
      std::size_t count = 0;
      for (int i : remaining) {
        if (cand.distance(c.points[i]) <= dist_tol) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best = cand;
        // Standard adaptive iteration bound for a 3-point sample.
        const double w = static_cast<double>(count) / n;
        const double denom = std::log(std::max(1e-12, 1.0 - w * w * w));
        needed = denom < 0.0
                     ? static_cast<int>(std::ceil(
                           std::log(1.0 - opt.success_probability) / denom))
                     : opt.max_iterations;
      }
    }
    if (best_count < min_inliers) break;

    std::vector<int> inliers;
    for (int round = 0; round < opt.refine_rounds; ++round) {
      inliers.clear();
      for (int i : remaining) {
        if (best.distance(c.points[i]) <= dist_tol) inliers.push_back(i);
      }
      if (inliers.size() < 3) break;
      best = fit_plane_lsq(c.points, inliers);
    }
    inliers.clear();
    for (int i : remaining) {
      if (best.distance(c.points[i]) <= dist_tol) inliers.push_back(i);
    }
    if (inliers.size() < min_inliers) break;
    best.inlier_count = inliers.size();
    planes.push_back(best);

    std::vector<int> next;
    next.reserve(remaining.size() - inliers.size());
    std::size_t k = 0;
    for (int i : remaining) {
      if (k < inliers.size() && inliers[k] == i) {
        ++k;
      } else {
        next.push_back(i);
      }
    }
    remaining.swap(next);
  }
  return planes;
}

}  // namespace sheetloc
