#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "sheetloc/core/pgm_io.hpp"
#include "sheetloc/core/ply_io.hpp"

namespace sheetloc {
namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("sheetloc_io_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  std::filesystem::path dir_;
};

PointCloud random_cloud(int n, bool normals, bool intensities) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1000.0, 1000.0);
  std::uniform_real_distribution<double> i01(0.0, 1.0);
  std::normal_distribution<double> g;
  PointCloud c;
  for (int i = 0; i < n; ++i) {
    c.points.emplace_back(u(rng), u(rng), u(rng));
    if (normals) {
      Vec3 v(g(rng), g(rng), g(rng));
      c.normals.push_back(v.norm() > 1e-9 ? Vec3(v.normalized())
                                          : Vec3::UnitZ());
    }
    if (intensities) c.intensities.push_back(i01(rng));
  }
  return c;
}

TEST_F(IoTest, PlyRoundTripAllChannels) {
  const PointCloud c = random_cloud(100, true, true);
  write_ply(c, path("cloud.ply"));
  const PointCloud r = read_ply(path("cloud.ply"));
  ASSERT_EQ(r.size(), c.size());
  ASSERT_TRUE(r.has_normals());
  ASSERT_TRUE(r.has_intensities());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(r.points[i], c.points[i]);  // exact: %.17g round-trip
    EXPECT_EQ(r.normals[i], c.normals[i]);
    EXPECT_EQ(r.intensities[i], c.intensities[i]);
  }
}

TEST_F(IoTest, PlyPointsOnly) {
  const PointCloud c = random_cloud(10, false, false);
  write_ply(c, path("bare.ply"));
  const PointCloud r = read_ply(path("bare.ply"));
  EXPECT_EQ(r.size(), 10u);
  EXPECT_FALSE(r.has_normals());
  EXPECT_FALSE(r.has_intensities());
}

TEST_F(IoTest, MissingZPropertyIsRejected) {
  std::ofstream out(path("noz.ply"));
  out << "ply\nformat ascii 1.0\nelement vertex 1\n"
         "property float x\nproperty float y\nend_header\n1 2\n";
  out.close();
  EXPECT_THROW(read_ply(path("noz.ply")), MissingCoordinateProperty);
}

TEST_F(IoTest, ParseErrorCarriesLineNumber) {
  std::ofstream out(path("bad.ply"));
  out << "ply\nformat ascii 1.0\nelement vertex 2\n"
         "property float x\nproperty float y\nproperty float z\n"
         "end_header\n1 2 3\n4 oops 6\n";
  out.close();
  try {
    read_ply(path("bad.ply"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 9);
  }
}

TEST_F(IoTest, NonVertexElementsRejected) {
  std::ofstream out(path("face.ply"));
  out << "ply\nformat ascii 1.0\nelement vertex 0\n"
         "property float x\nproperty float y\nproperty float z\n"
         "element face 2\nproperty list uchar int vertex_indices\n"
         "end_header\n";
  out.close();
  EXPECT_THROW(read_ply(path("face.ply")), ParseError);
}

TEST_F(IoTest, PgmRoundTripWithinQuantization) {
  DepthImage img = DepthImage::make(17, 9, ImageKind::depth);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> depth(800.0, 1400.0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if ((x + y) % 7 == 0) continue;  // leave some pixels invalid
      img.set(x, y, depth(rng));
    }
  }
  img.camera.focal_length_px = 321.0;
  img.cam_pose = RigidTransform::from_axis_angle(Vec3(1, 1, 0), 30.0,
                                                 Vec3(10, 20, 30));
  write_pgm(img, path("depth.pgm"));
  const DepthImage r = read_pgm(path("depth.pgm"));
  ASSERT_EQ(r.width, img.width);
  ASSERT_EQ(r.height, img.height);
  EXPECT_EQ(r.kind, ImageKind::depth);
  EXPECT_NEAR(r.camera.focal_length_px, 321.0, 1e-12);
  ASSERT_TRUE(r.cam_pose.has_value());
  EXPECT_LT(img.cam_pose->rotation_angle_to(*r.cam_pose), 1e-9);
  const double quantum = (1400.0 - 800.0) / 65534.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      ASSERT_EQ(r.is_valid(x, y), img.is_valid(x, y));
      if (img.is_valid(x, y)) {
        EXPECT_NEAR(r.at(x, y), img.at(x, y), quantum);
      }
    }
  }
}

TEST_F(IoTest, PgmIntensityKeepsDepthMapping) {
  DepthImage img = DepthImage::make(4, 4, ImageKind::intensity);
  img.depth_offset = 900.0;
  img.depth_scale = 50.0;
  img.set(1, 1, 0.5);
  write_pgm(img, path("int.pgm"));
  const DepthImage r = read_pgm(path("int.pgm"));
  EXPECT_EQ(r.kind, ImageKind::intensity);
  EXPECT_NEAR(r.depth_mm(1, 1), 925.0, 1e-3);
  EXPECT_FALSE(r.is_valid(0, 0));
}

}  // namespace
}  // namespace sheetloc
