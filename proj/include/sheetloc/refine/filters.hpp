#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>

#include "sheetloc/core/kdtree.hpp"
#include "sheetloc/core/point_cloud.hpp"
#include "sheetloc/refine/plane.hpp"

namespace sheetloc {

/// Bookkeeping emitted by every filter: sizes, wall time and an echo of the
/// parameters it ran with. points_out <= points_in always holds; filters
/// never invent or reorder points.
struct FilterReport {
  std::string filter;
  std::size_t points_in = 0;
  std::size_t points_out = 0;
  double duration_s = 0.0;
  std::map<std::string, std::string> parameters;
};

namespace detail {

class FilterTimer {
 public:
  FilterTimer(FilterReport& report, std::string name, std::size_t points_in)
      : report_(report), start_(std::chrono::steady_clock::now()) {
    report_.filter = std::move(name);
    report_.points_in = points_in;
  }
  ~FilterTimer() {
    report_.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
  }

 private:
  FilterReport& report_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

/// Keeps exactly the points whose predicate holds, preserving order and
/// channels.
template <typename Pred>
PointCloud keep_if(const PointCloud& c, Pred&& pred) {
  PointCloud out;
  out.frame_id = c.frame_id;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (pred(i)) out.push_from(c, i);
  }
  return out;
}

}  // namespace detail

/// Keeps points whose Z coordinate, expressed in `frame`, lies in
/// [z_min, z_max]. `frame` is the pose of the thresholding frame within the
/// cloud's frame (identity = threshold along the cloud's own Z).
inline std::pair<PointCloud, FilterReport> z_band_filter(
    const PointCloud& c, const RigidTransform& frame, double z_min,
    double z_max) {
  if (!(z_min < z_max)) throw InvalidArgument("z_band: z_min must be < z_max");
  FilterReport report;
  detail::FilterTimer timer(report, "z_band", c.size());
  report.parameters["z_min"] = detail::fmt(z_min);
  report.parameters["z_max"] = detail::fmt(z_max);

  const RigidTransform inv = frame.inverse();
  PointCloud out = detail::keep_if(c, [&](std::size_t i) {
    const double z = (inv * c.points[i]).z();
    return z >= z_min && z <= z_max;
  });
  report.points_out = out.size();
  return {std::move(out), report};
}

/// Keeps points whose intensity lies in [lo, hi].
inline std::pair<PointCloud, FilterReport> intensity_filter(
    const PointCloud& c, double lo, double hi) {
  if (lo > hi) throw InvalidArgument("intensity_filter: lo must be <= hi");
  if (!c.has_intensities()) {
    throw MissingChannel("intensity_filter: cloud has no intensity channel");
  }
  FilterReport report;
  detail::FilterTimer timer(report, "intensity", c.size());
  report.parameters["lo"] = detail::fmt(lo);
  report.parameters["hi"] = detail::fmt(hi);

  PointCloud out = detail::keep_if(c, [&](std::size_t i) {
    return c.intensities[i] >= lo && c.intensities[i] <= hi;
  });
  report.points_out = out.size();
  return {std::move(out), report};
}

/// Keeps points whose normal is within max_angle of `axis`. By default the
/// test is sign-insensitive (|cos|), since camera-supplied and estimated
/// normals may disagree in orientation; pass signed_test = true for the
/// one-sided variant.
inline std::pair<PointCloud, FilterReport> normal_direction_filter(
    const PointCloud& c, const Vec3& axis, double max_angle_deg,
    bool signed_test = false) {
  if (!c.has_normals()) {
    throw MissingChannel("normal_direction_filter: cloud has no normals");
  }
  FilterReport report;
  detail::FilterTimer timer(report, "normal_direction", c.size());
  report.parameters["max_angle_deg"] = detail::fmt(max_angle_deg);
  report.parameters["signed"] = signed_test ? "true" : "false";

  const Vec3 a = axis.normalized();
  const double cos_limit = std::cos(deg_to_rad(std::min(max_angle_deg, 180.0)));
  PointCloud out = detail::keep_if(c, [&](std::size_t i) {
    const double d = c.normals[i].dot(a);
    return (signed_test ? d : std::abs(d)) >= cos_limit - 1e-12;
  });
  report.points_out = out.size();
  return {std::move(out), report};
}

/// Axis-aligned box in a named frame, used to shield a region from
/// remove_near_planes.
struct BoxRegion {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  RigidTransform pose;  // box frame within the cloud frame

  bool contains(const Vec3& p_cloud) const {
    const Vec3 p = pose.inverse() * p_cloud;
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() &&
           p.y() <= max.y() && p.z() >= min.z() && p.z() <= max.z();
  }
};

/// Removes points within `dist` of any of the given planes, except those
/// inside the optional exclusion region.
inline std::pair<PointCloud, FilterReport> remove_near_planes(
    const PointCloud& c, const std::vector<Plane>& planes, double dist,
    const std::optional<BoxRegion>& exclude = std::nullopt) {
  if (dist <= 0.0) throw InvalidArgument("remove_near_planes: dist <= 0");
  FilterReport report;
  detail::FilterTimer timer(report, "remove_near_planes", c.size());
  report.parameters["dist"] = detail::fmt(dist);
  report.parameters["planes"] = std::to_string(planes.size());

  PointCloud out = detail::keep_if(c, [&](std::size_t i) {
    const Vec3& p = c.points[i];
    if (exclude && exclude->contains(p)) return true;
    for (const Plane& plane : planes) {
      if (plane.distance(p) <= dist) return false;
    }
    return true;
  });
  report.points_out = out.size();
  return {std::move(out), report};
}

/// Static-structure subtraction: keeps only points with no neighbor within
/// `radius` in the reference cloud. Both clouds must be expressed in the
/// same frame.
inline std::pair<PointCloud, FilterReport> background_subtract(
    const PointCloud& c, const PointCloud& reference, double radius) {
  if (radius <= 0.0) throw InvalidArgument("background_subtract: radius <= 0");
  FilterReport report;
  detail::FilterTimer timer(report, "background_subtract", c.size());
  report.parameters["radius"] = detail::fmt(radius);
  report.parameters["reference_points"] = std::to_string(reference.size());

  const NeighborIndex index(reference);
  PointCloud out = detail::keep_if(c, [&](std::size_t i) {
    return !index.has_neighbor_within(c.points[i], radius);
  });
  report.points_out = out.size();
  return {std::move(out), report};
}

/// Classic statistical outlier removal: a point is dropped when its mean
/// distance to its k nearest neighbors exceeds the global mean by more than
/// stddev_mult standard deviations.
inline std::pair<PointCloud, FilterReport> statistical_outlier_removal(
    const PointCloud& c, int k, double stddev_mult) {
  if (k < 1) throw InvalidArgument("statistical_outlier_removal: k < 1");
  if (c.size() <= static_cast<std::size_t>(k)) {
    throw TooFewPoints("statistical_outlier_removal: need more than k points");
  }
  FilterReport report;
  detail::FilterTimer timer(report, "statistical_outlier_removal", c.size());
  report.parameters["k"] = std::to_string(k);
  report.parameters["stddev_mult"] = detail::fmt(stddev_mult);

  const NeighborIndex index(c);
  std::vector<double> mean_dist(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto nn = index.knn(c.points[i], k + 1);
    double sum = 0.0;
    std::size_t used = 0;
    for (int j : nn) {
      if (j == static_cast<int>(i)) continue;
      sum += (c.points[j] - c.points[i]).norm();
      ++used;
    }
    mean_dist[i] = sum / static_cast<double>(used);
  }
  double mean = 0.0;
  for (double d : mean_dist) mean += d;
  mean /= static_cast<double>(mean_dist.size());
  double var = 0.0;
  for (double d : mean_dist) var += (d - mean) * (d - mean);
  var /= static_cast<double>(mean_dist.size());
  const double limit = mean + stddev_mult * std::sqrt(var);

  PointCloud out =
      detail::keep_if(c, [&](std::size_t i) { return mean_dist[i] <= limit; });
  report.points_out = out.size();
  return {std::move(out), report};
}

}  // namespace sheetloc
