#include <gtest/gtest.h>

#include <random>

#include "sheetloc/core/transform.hpp"

namespace sheetloc {
namespace {

RigidTransform random_transform(std::mt19937& rng) {
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  std::uniform_real_distribution<double> coord(-500.0, 500.0);
  std::normal_distribution<double> axis;
  Vec3 ax(axis(rng), axis(rng), axis(rng));
  if (ax.norm() < 1e-6) ax = Vec3::UnitZ();
  return RigidTransform::from_axis_angle(
      ax, angle(rng), Vec3(coord(rng), coord(rng), coord(rng)));
}

TEST(RigidTransform, IdentityComposition) {
  std::mt19937 rng(7);
  const RigidTransform t = random_transform(rng);
  const RigidTransform left = RigidTransform::identity() * t;
  EXPECT_LT(t.rotation_angle_to(left), 1e-12);
  EXPECT_LT(t.translation_distance_to(left), 1e-12);
}

TEST(RigidTransform, InverseComposesToIdentity) {
  std::mt19937 rng(11);
  for (int i = 0; i < 20; ++i) {
    const RigidTransform t = random_transform(rng);
    const RigidTransform id = t * t.inverse();
    EXPECT_LT((id.rotation() - Mat3::Identity()).norm(), 1e-9);
    EXPECT_LT(id.translation().norm(), 1e-9);
  }
}

TEST(RigidTransform, QuarterTurnsCompose) {
  const RigidTransform r = RigidTransform::rot_z(90.0);
  const Vec3 p = (r * r) * Vec3(1.0, 0.0, 0.0);
  EXPECT_NEAR(p.x(), -1.0, 1e-12);
  EXPECT_NEAR(p.y(), 0.0, 1e-12);
  EXPECT_NEAR(p.z(), 0.0, 1e-12);
}

TEST(RigidTransform, CompositionIsAssociative) {
  std::mt19937 rng(13);
  const RigidTransform a = random_transform(rng);
  const RigidTransform b = random_transform(rng);
  const RigidTransform c = random_transform(rng);
  const RigidTransform lhs = (a * b) * c;
  const RigidTransform rhs = a * (b * c);
  EXPECT_LT(lhs.rotation_angle_to(rhs), 1e-9);
  EXPECT_LT(lhs.translation_distance_to(rhs), 1e-9);
}

TEST(RigidTransform, LongChainStaysOrthonormal) {
  std::mt19937 rng(17);
  RigidTransform chain;
  for (int i = 0; i < 100; ++i) chain = chain * random_transform(rng);
  const Mat3 r = chain.rotation();
  EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-6);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-6);
}

TEST(RigidTransform, RejectsNonOrthonormal) {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 2.0;
  EXPECT_THROW(RigidTransform(bad, Vec3::Zero()), InvalidTransform);
  Mat3 mirror = Mat3::Identity();
  mirror(2, 2) = -1.0;
  EXPECT_THROW(RigidTransform(mirror, Vec3::Zero()), InvalidTransform);
}

TEST(RigidTransform, MatrixRoundTrip) {
  std::mt19937 rng(19);
  const RigidTransform t = random_transform(rng);
  const RigidTransform back = RigidTransform::from_matrix(t.to_matrix());
  EXPECT_LT(t.rotation_angle_to(back), 1e-12);
  EXPECT_LT(t.translation_distance_to(back), 1e-12);
}

}  // namespace
}  // namespace sheetloc
