#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "sheetloc/core/kdtree.hpp"

namespace sheetloc {
namespace {

// Brute-force oracle with the documented tie rule: sort by (distance, index).
std::vector<int> brute_knn(const std::vector<Vec3>& pts, const Vec3& q,
                           int k) {
  std::vector<std::pair<double, int>> all;
  all.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    all.emplace_back((pts[i] - q).squaredNorm(), static_cast<int>(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<int> out;
  for (int i = 0; i < std::min<int>(k, all.size()); ++i) {
    out.push_back(all[i].second);
  }
  return out;
}

std::vector<int> brute_radius(const std::vector<Vec3>& pts, const Vec3& q,
                              double r) {
  std::vector<int> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if ((pts[i] - q).squaredNorm() <= r * r) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<Vec3> random_points(std::mt19937& rng, int n, double extent,
                                bool quantized) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) {
    p = Vec3(u(rng), u(rng), u(rng));
    if (quantized) p = (p / 10.0).array().round() * 10.0;  // force ties
  }
  return pts;
}

TEST(NeighborIndex, MatchesBruteForceKnn) {
  std::mt19937 rng(101);
  std::uniform_int_distribution<int> size_dist(1, 500);
  std::uniform_int_distribution<int> k_dist(1, 20);
  for (int trial = 0; trial < 200; ++trial) {
    const bool quantized = trial % 3 == 0;
    const auto pts = random_points(rng, size_dist(rng), 100.0, quantized);
    NeighborIndex index(pts);
    const auto queries = random_points(rng, 5, 120.0, quantized);
    for (const Vec3& q : queries) {
      const int k = k_dist(rng);
      EXPECT_EQ(index.knn(q, k), brute_knn(pts, q, k));
    }
  }
}

TEST(NeighborIndex, MatchesBruteForceRadius) {
  std::mt19937 rng(103);
  std::uniform_int_distribution<int> size_dist(1, 400);
  std::uniform_real_distribution<double> r_dist(0.0, 80.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_points(rng, size_dist(rng), 100.0, trial % 4 == 0);
    NeighborIndex index(pts);
    const auto queries = random_points(rng, 4, 120.0, false);
    for (const Vec3& q : queries) {
      const double r = r_dist(rng);
      EXPECT_EQ(index.radius(q, r), brute_radius(pts, q, r));
    }
  }
}

TEST(NeighborIndex, DuplicatePointsBreakTiesByIndex) {
  std::vector<Vec3> pts(10, Vec3(1.0, 2.0, 3.0));
  NeighborIndex index(pts);
  EXPECT_EQ(index.knn(Vec3(0, 0, 0), 3), (std::vector<int>{0, 1, 2}));
}

TEST(NeighborIndex, KnnLargerThanCloudReturnsAll) {
  std::mt19937 rng(107);
  const auto pts = random_points(rng, 7, 10.0, false);
  NeighborIndex index(pts);
  EXPECT_EQ(index.knn(Vec3::Zero(), 50).size(), 7u);
}

TEST(NeighborIndex, EmptyCloud) {
  NeighborIndex index{std::vector<Vec3>{}};
  EXPECT_TRUE(index.knn(Vec3::Zero(), 3).empty());
  EXPECT_TRUE(index.radius(Vec3::Zero(), 5.0).empty());
  EXPECT_FALSE(index.has_neighbor_within(Vec3::Zero(), 5.0));
}

TEST(NeighborIndex, HasNeighborWithinAgreesWithRadius) {
  std::mt19937 rng(109);
  const auto pts = random_points(rng, 200, 50.0, false);
  NeighborIndex index(pts);
  for (int i = 0; i < 50; ++i) {
    const auto q = random_points(rng, 1, 70.0, false)[0];
    const double r = 5.0 + (i % 7);
    EXPECT_EQ(index.has_neighbor_within(q, r),
              !brute_radius(pts, q, r).empty());
  }
}

}  // namespace
}  // namespace sheetloc
