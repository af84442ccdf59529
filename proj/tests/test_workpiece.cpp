#include <gtest/gtest.h>

#include "sheetloc/match3d/workpiece.hpp"

namespace sheetloc {
namespace {

WorkpieceModel unit_square(double thickness = 1.0) {
  WorkpieceModel m;
  m.id = "square";
  m.outline = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.thickness = thickness;
  return m;
}

TEST(SampleModel, PointCountTracksSurfaceArea) {
  const WorkpieceModel m = unit_square(1.0);
  const double step = 0.05;
  const PointCloud cloud = sample_model(m, step);
  // Surface area: 2 faces of 1 plus 4 walls of 1x1 = 6.
  const double expected = 6.0 / (step * step);
  EXPECT_NEAR(static_cast<double>(cloud.size()), expected, 0.2 * expected);
  ASSERT_TRUE(cloud.has_normals());
  for (const Vec3& n : cloud.normals) EXPECT_NEAR(n.norm(), 1.0, 1e-12);
}

TEST(SampleModel, HugeStepStillEmitsCorners) {
  const WorkpieceModel m = unit_square(1.0);
  const PointCloud cloud = sample_model(m, 100.0);
  EXPECT_GE(cloud.size(), 8u);
}

TEST(SampleModel, SelfIntersectingOutlineRejected) {
  WorkpieceModel m;
  m.id = "bowtie";
  m.outline = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  m.thickness = 1.0;
  EXPECT_THROW(sample_model(m, 0.1), DegeneratePolygon);
}

TEST(SampleModel, NormalsPointOutward) {
  const WorkpieceModel m = unit_square(2.0);
  const PointCloud cloud = sample_model(m, 0.25);
  const Vec3 centroid(0.5, 0.5, 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_GT(cloud.normals[i].dot(cloud.points[i] - centroid), 0.0)
        << "inward normal at point " << i;
  }
}

TEST(SampleModel, SpacingWithinBand) {
  const WorkpieceModel m = unit_square(1.0);
  const double step = 0.1;
  const PointCloud cloud = sample_model(m, step);
  // Nearest-neighbor spacing stays within [0.5, 1.5] x step.
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      if (i == j) continue;
      nearest = std::min(nearest, (cloud.points[i] - cloud.points[j]).norm());
    }
    EXPECT_GE(nearest, 0.4 * step);
    EXPECT_LE(nearest, 1.6 * step);
  }
}

TEST(SampleModelEdges, ContourOnBothRims) {
  const WorkpieceModel m = unit_square(2.0);
  const PointCloud edges = sample_model_edges(m, 0.5);
  ASSERT_FALSE(edges.empty());
  for (const Vec3& p : edges.points) {
    EXPECT_NEAR(std::abs(p.z()), 1.0, 1e-12);
    const bool on_boundary = std::abs(p.x()) < 1e-9 ||
                             std::abs(p.x() - 1.0) < 1e-9 ||
                             std::abs(p.y()) < 1e-9 ||
                             std::abs(p.y() - 1.0) < 1e-9;
    EXPECT_TRUE(on_boundary);
  }
}

TEST(Polygon, SimplicityAndArea) {
  EXPECT_TRUE(polygon::is_simple({{0, 0}, {2, 0}, {2, 1}, {0, 1}}));
  EXPECT_FALSE(polygon::is_simple({{0, 0}, {1, 1}, {1, 0}, {0, 1}}));
  EXPECT_NEAR(polygon::signed_area({{0, 0}, {2, 0}, {2, 1}, {0, 1}}), 2.0,
              1e-12);
  EXPECT_NEAR(polygon::signed_area({{0, 0}, {0, 1}, {2, 1}, {2, 0}}), -2.0,
              1e-12);
}

TEST(Workpiece, DiameterCoversOutlineAndThickness) {
  const WorkpieceModel m = unit_square(3.0);
  EXPECT_NEAR(m.diameter(), std::sqrt(2.0 + 9.0), 1e-12);
}

}  // namespace
}  // namespace sheetloc
