#pragma once

#include <array>

#include "sheetloc/core/depth_image.hpp"

namespace sheetloc {

/// Calibration plate with three light beacons at known plate-frame
/// positions (z = 0 plane). Labelling relies on the pairwise beacon
/// distances being distinct, so layouts closer than kMinDistinctness to
/// isosceles are rejected.
struct BeaconPlate {
  static constexpr double kMinDistinctness = 5.0;  // mm

  std::array<Vec2, 3> beacons = {Vec2(0, 0), Vec2(300, 0), Vec2(0, 200)};

  std::array<double, 3> pairwise_distances() const {
    return {(beacons[0] - beacons[1]).norm(),
            (beacons[0] - beacons[2]).norm(),
            (beacons[1] - beacons[2]).norm()};
  }

  void validate() const {
    const Vec2 e1 = beacons[1] - beacons[0];
    const Vec2 e2 = beacons[2] - beacons[0];
    if (std::abs(e1.x() * e2.y() - e1.y() * e2.x()) < 1e-6) {
      throw AmbiguousLabelling("beacon layout is collinear");
    }
    const auto d = pairwise_distances();
    if (std::abs(d[0] - d[1]) < kMinDistinctness ||
        std::abs(d[0] - d[2]) < kMinDistinctness ||
        std::abs(d[1] - d[2]) < kMinDistinctness) {
      throw AmbiguousLabelling(
          "beacon pairwise distances are not distinct by 5 mm");
    }
  }

  Vec3 beacon3(int i) const {
    return Vec3(beacons[i].x(), beacons[i].y(), 0.0);
  }
};

struct BeaconDetectionOptions {
  /// Pixels at or above this intensity belong to a blob.
  double threshold = 0.6;
  /// Blobs smaller than this are noise.
  std::size_t min_pixels = 3;
};

/// Finds the three light beacons in an intensity image: thresholded
/// 8-connected blobs, the three brightest kept, sub-pixel centroids by
/// intensity weighting, labelled against the plate by matching pairwise
/// distance ratios. Returns the pixel centroids ordered like
/// plate.beacons.
inline std::array<Vec2, 3> detect_beacons(
    const DepthImage& img, const BeaconPlate& plate,
    const BeaconDetectionOptions& opt = {}) {
  if (img.kind != ImageKind::intensity) {
    throw WrongImageKind("detect_beacons: expected an intensity image");
  }
  plate.validate();

  // 8-connected components above the threshold.
  std::vector<int> blob_id(img.values.size(), -1);
  struct Blob {
    double weight = 0.0;  // total intensity
    Vec2 centroid_acc = Vec2::Zero();
    std::size_t pixels = 0;
    // A blob cut off by the image border has a biased centroid.
    bool touches_border = false;
  };
  std::vector<Blob> blobs;
  std::vector<std::size_t> stack;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = img.index(x, y);
      if (blob_id[i] >= 0 || !img.valid[i] || img.values[i] < opt.threshold) {
        continue;
      }
      const int id = static_cast<int>(blobs.size());
      blobs.emplace_back();
      stack.clear();
      stack.push_back(i);
      blob_id[i] = id;
      while (!stack.empty()) {
        const std::size_t j = stack.back();
        stack.pop_back();
        const int jx = static_cast<int>(j % img.width);
        const int jy = static_cast<int>(j / img.width);
        Blob& b = blobs[id];
        const double w = img.values[j];
        b.weight += w;
        b.centroid_acc += w * Vec2(jx + 0.5, jy + 0.5);
        ++b.pixels;
        if (jx == 0 || jx == img.width - 1 || jy == 0 ||
            jy == img.height - 1) {
          b.touches_border = true;
        }
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = jx + dx, ny = jy + dy;
            if (!img.in_bounds(nx, ny)) continue;
            const std::size_t n = img.index(nx, ny);
            if (blob_id[n] >= 0 || !img.valid[n] ||
                img.values[n] < opt.threshold) {
              continue;
            }
            blob_id[n] = id;
            stack.push_back(n);
          }
        }
      }
    }
  }

  std::vector<const Blob*> usable;
  for (const Blob& b : blobs) {
    if (b.pixels >= opt.min_pixels && !b.touches_border) usable.push_back(&b);
  }
  if (usable.size() < 3) {
    throw BeaconCountMismatch("detect_beacons: found " +
                              std::to_string(usable.size()) +
                              " blobs, need 3");
  }
  std::stable_sort(usable.begin(), usable.end(),
                   [](const Blob* a, const Blob* b) {
                     return a->weight > b->weight;
                   });
  std::array<Vec2, 3> centroids;
  for (int i = 0; i < 3; ++i) {
    centroids[i] = usable[i]->centroid_acc / usable[i]->weight;
  }

  // Label by distance-ratio matching over all 6 assignments.
  const auto expected = plate.pairwise_distances();
  const double expected_max =
      std::max({expected[0], expected[1], expected[2]});
  double best_cost = std::numeric_limits<double>::infinity();
  double second_cost = best_cost;
  std::array<int, 3> best_perm = {0, 1, 2};
  std::array<int, 3> perm = {0, 1, 2};
  std::sort(perm.begin(), perm.end());
  do {
    const double d01 = (centroids[perm[0]] - centroids[perm[1]]).norm();
    const double d02 = (centroids[perm[0]] - centroids[perm[2]]).norm();
    const double d12 = (centroids[perm[1]] - centroids[perm[2]]).norm();
    const double d_max = std::max({d01, d02, d12});
    if (d_max < 1e-9) continue;
    const double cost = std::abs(d01 / d_max - expected[0] / expected_max) +
                        std::abs(d02 / d_max - expected[1] / expected_max) +
                        std::abs(d12 / d_max - expected[2] / expected_max);
    if (cost < best_cost) {
      second_cost = best_cost;
      best_cost = cost;
      best_perm = perm;
    } else if (cost < second_cost) {
      second_cost = cost;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  if (!(best_cost < 0.5 * second_cost) || best_cost > 0.2) {
    throw AmbiguousLabelling(
        "detect_beacons: blob layout does not match the plate distinctly");
  }
  return {centroids[best_perm[0]], centroids[best_perm[1]],
          centroids[best_perm[2]]};
}

}  // namespace sheetloc
