#pragma once

#include <cstdint>
#include <unordered_map>

#include "sheetloc/core/depth_image.hpp"
#include "sheetloc/core/kdtree.hpp"
#include "sheetloc/core/point_cloud.hpp"

namespace sheetloc {

/// Right-handed orthonormal basis (u, v, w) with w = axis. Deterministic:
/// the seed vector is the unit axis with the smallest |component| of `axis`.
inline void orthonormal_basis(const Vec3& axis, Vec3& u, Vec3& v) {
  const Vec3 w = axis.normalized();
  int smallest = 0;
  w.cwiseAbs().minCoeff(&smallest);
  Vec3 seed = Vec3::Zero();
  seed[smallest] = 1.0;
  u = seed.cross(w).normalized();
  v = w.cross(u);
}

/// Per-point unit normals from the covariance of the k nearest neighbors
/// (query point excluded). Normals are sign-oriented toward `viewpoint`
/// so that n . (viewpoint - p) >= 0, matching a camera at the frame origin
/// looking along +Z.
///
/// Throws TooFewPoints when the cloud has fewer than k+1 points and
/// DegenerateNeighborhood when a neighborhood is collinear (the smallest
/// eigenvector is not unique).
inline PointCloud estimate_normals(const PointCloud& c, int k,
                                   const Vec3& viewpoint = Vec3::Zero()) {
  if (k < 2) throw InvalidArgument("estimate_normals requires k >= 2");
  if (c.size() < static_cast<std::size_t>(k) + 1) {
    throw TooFewPoints("estimate_normals: cloud smaller than k+1");
  }
  NeighborIndex index(c);
  PointCloud out = c;
  out.normals.assign(c.size(), Vec3::UnitZ());

  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3& p = c.points[i];
    std::vector<int> nn = index.knn(p, k + 1);
    // Drop the query point itself; if a duplicate shadows it, drop the tail.
    auto self = std::find(nn.begin(), nn.end(), static_cast<int>(i));
    if (self != nn.end()) nn.erase(self);
    else nn.pop_back();

    Vec3 mean = Vec3::Zero();
    for (int j : nn) mean += c.points[j];
    mean /= static_cast<double>(nn.size());
    Mat3 cov = Mat3::Zero();
    for (int j : nn) {
      const Vec3 d = c.points[j] - mean;
      cov += d * d.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 evals = eig.eigenvalues();  // ascending
    if (evals[2] <= 0.0 || evals[1] / evals[2] < 1e-9) {
      throw DegenerateNeighborhood(
          "estimate_normals: collinear neighborhood at point " +
          std::to_string(i));
    }
    Vec3 n = eig.eigenvectors().col(0).normalized();
    if (n.dot(viewpoint - p) < 0.0) n = -n;
    out.normals[i] = n;
  }
  return out;
}

namespace detail {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::size_t h = std::hash<std::int64_t>{}(k.x);
    h ^= std::hash<std::int64_t>{}(k.y) + 0x9e3779b97f4a7c15ull + (h << 6) +
         (h >> 2);
    h ^= std::hash<std::int64_t>{}(k.z) + 0x9e3779b97f4a7c15ull + (h << 6) +
         (h >> 2);
    return h;
  }
};

inline VoxelKey voxel_of(const Vec3& p, double cell) {
  return VoxelKey{static_cast<std::int64_t>(std::floor(p.x() / cell)),
                  static_cast<std::int64_t>(std::floor(p.y() / cell)),
                  static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

}  // namespace detail

/// One output point per occupied voxel: the centroid of its members, with
/// channel values averaged (normals re-normalised). Output voxels are
/// ordered by the index of their first member point.
inline PointCloud voxel_downsample(const PointCloud& c, double cell) {
  if (cell <= 0.0) throw InvalidArgument("voxel cell must be positive");

  struct Acc {
    Vec3 psum = Vec3::Zero();
    Vec3 nsum = Vec3::Zero();
    double isum = 0.0;
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<detail::VoxelKey, Acc, detail::VoxelKeyHash> bins;
  bins.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto [it, inserted] = bins.try_emplace(detail::voxel_of(c.points[i], cell));
    Acc& acc = it->second;
    if (inserted) acc.first = i;
    acc.psum += c.points[i];
    if (c.has_normals()) acc.nsum += c.normals[i];
    if (c.has_intensities()) acc.isum += c.intensities[i];
    ++acc.count;
  }

  std::vector<const Acc*> ordered;
  ordered.reserve(bins.size());
  for (const auto& [key, acc] : bins) ordered.push_back(&acc);
  std::sort(ordered.begin(), ordered.end(),
            [](const Acc* a, const Acc* b) { return a->first < b->first; });

  PointCloud out;
  out.frame_id = c.frame_id;
  out.points.reserve(ordered.size());
  for (const Acc* acc : ordered) {
    const double n = static_cast<double>(acc->count);
    out.points.push_back(acc->psum / n);
    if (c.has_normals()) {
      Vec3 nn = acc->nsum / n;
      const double len = nn.norm();
      out.normals.push_back(len > 1e-12 ? Vec3(nn / len) : Vec3::UnitZ());
    }
    if (c.has_intensities()) out.intensities.push_back(acc->isum / n);
  }
  return out;
}

/// Orthographic projection of a cloud along `axis`: a depth grid
/// perpendicular to the axis where each pixel holds the minimum projected
/// distance (closest to the camera) of the points binning into it.
/// The grid frame is recorded in the result's cam_pose.
inline DepthImage project_to_depth_image(const PointCloud& c, const Vec3& axis,
                                         double resolution_mm_per_px) {
  if (c.empty()) throw EmptyCloud("project_to_depth_image: empty cloud");
  if (resolution_mm_per_px <= 0.0) {
    throw InvalidArgument("resolution must be positive");
  }
  if (std::abs(axis.norm() - 1.0) > 1e-6) {
    throw InvalidArgument("projection axis must be unit length");
  }

  Vec3 u, v;
  orthonormal_basis(axis, u, v);
  const Vec3 w = axis.normalized();

  double a_min = std::numeric_limits<double>::infinity();
  double b_min = a_min, a_max = -a_min, b_max = -a_min;
  for (const Vec3& p : c.points) {
    const double a = p.dot(u), b = p.dot(v);
    a_min = std::min(a_min, a);
    a_max = std::max(a_max, a);
    b_min = std::min(b_min, b);
    b_max = std::max(b_max, b);
  }

  const double res = resolution_mm_per_px;
  const int width = static_cast<int>(std::floor((a_max - a_min) / res)) + 1;
  const int height = static_cast<int>(std::floor((b_max - b_min) / res)) + 1;

  DepthImage img = DepthImage::make(width, height, ImageKind::depth);
  img.projection = ProjectionKind::orthographic;
  img.mm_per_px = res;
  Mat3 rot;
  rot.col(0) = u;
  rot.col(1) = v;
  rot.col(2) = w;
  img.cam_pose = RigidTransform(rot, rot * Vec3(a_min, b_min, 0.0));

  for (const Vec3& p : c.points) {
    const int x = std::min(
        width - 1, static_cast<int>(std::floor((p.dot(u) - a_min) / res)));
    const int y = std::min(
        height - 1, static_cast<int>(std::floor((p.dot(v) - b_min) / res)));
    const double d = p.dot(w);
    if (!img.is_valid(x, y) || d < img.at(x, y)) img.set(x, y, d);
  }
  return img;
}

}  // namespace sheetloc
