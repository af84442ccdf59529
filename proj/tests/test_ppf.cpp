#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "sheetloc/match3d/matcher.hpp"
#include "sheetloc/match3d/workpiece.hpp"

namespace sheetloc {
namespace {

// Chiral L-shaped bracket: flipping it over changes the silhouette, so the
// correct pose is separable from its flip by score.
WorkpieceModel l_bracket() {
  WorkpieceModel m;
  m.id = "l_bracket";
  m.outline = {{0, 0}, {60, 0}, {60, 20}, {20, 20}, {20, 50}, {0, 50}};
  m.thickness = 3.0;
  return m;
}

PointCloud sampled_l_bracket(double step = 4.0) {
  return sample_model(l_bracket(), step);
}

// ---------------------------------------------------------------------------
// Model construction

TEST(BuildPpfModel, TwoPointModelHasTwoOrderedEntries) {
  PointCloud c;
  c.points.emplace_back(0.0, 0.0, 0.0);
  c.points.emplace_back(10.0, 0.0, 0.0);
  c.normals.push_back(Vec3::UnitZ());
  c.normals.push_back(Vec3::UnitZ());
  const PpfModel model = build_ppf_model(c, 1.0, 12.0);
  EXPECT_EQ(model.entry_count(), 2u);
}

TEST(BuildPpfModel, OwnPairsAlwaysFound) {
  const PointCloud cloud = sampled_l_bracket(8.0);
  const PpfModel model = build_ppf_model(cloud, 2.0, 12.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      if (i == j) continue;
      const PpfFeature f = compute_ppf(cloud.points[i], cloud.normals[i],
                                       cloud.points[j], cloud.normals[j]);
      const auto* entries = model.lookup(f);
      ASSERT_NE(entries, nullptr);
      bool found = false;
      for (const auto& e : *entries) {
        if (e.ref_index == i) found = true;
      }
      EXPECT_TRUE(found) << "pair (" << i << "," << j << ") lost";
    }
  }
}

TEST(BuildPpfModel, HalvingDistStepNeverDecreasesBucketCount) {
  const PointCloud cloud = sampled_l_bracket(8.0);
  double dist_step = 8.0;
  std::size_t prev = 0;
  for (int i = 0; i < 4; ++i) {
    const PpfModel model = build_ppf_model(cloud, dist_step, 12.0);
    EXPECT_GE(model.table.size(), prev);
    prev = model.table.size();
    dist_step /= 2.0;
  }
}

TEST(BuildPpfModel, MissingNormalsThrows) {
  PointCloud c;
  c.points.emplace_back(0.0, 0.0, 0.0);
  c.points.emplace_back(1.0, 0.0, 0.0);
  EXPECT_THROW(build_ppf_model(c, 1.0, 12.0), MissingChannel);
}

TEST(PpfModelCache, RoundTripsThroughFile) {
  const PointCloud cloud = sampled_l_bracket(8.0);
  const PpfModel model = build_ppf_model(cloud, 2.0, 12.0);
  const auto path = std::filesystem::temp_directory_path() / "model.slppf";
  save_ppf_model(model, path.string());
  const PpfModel back = load_ppf_model(path.string());
  EXPECT_EQ(back.cloud.size(), model.cloud.size());
  EXPECT_EQ(back.table.size(), model.table.size());
  EXPECT_EQ(back.entry_count(), model.entry_count());
  EXPECT_EQ(back.dist_step, model.dist_step);
  EXPECT_EQ(back.diameter, model.diameter);
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------
// Voting equivalence against a brute-force oracle

// Independent re-computation of the accumulator: straight loops over all
// ordered model pairs for every scene pair, no hash table involved.
std::vector<std::uint32_t> brute_force_accumulator(
    const PointCloud& scene, int ref, const std::vector<int>& neighbors,
    const PointCloud& model_cloud, double dist_step, double angle_step_deg) {
  const int n_alpha =
      std::max(1, static_cast<int>(std::lround(360.0 / angle_step_deg)));
  std::vector<std::uint32_t> acc(model_cloud.size() * n_alpha, 0);
  const double angle_step = deg_to_rad(angle_step_deg);

  auto bucket4 = [&](const Vec3& p1, const Vec3& n1, const Vec3& p2,
                     const Vec3& n2, std::array<long, 4>& out) -> bool {
    const Vec3 d = p2 - p1;
    const double dist = d.norm();
    if (dist < 1e-12) return false;
    const Vec3 dn = d / dist;
    const auto ang = [](const Vec3& a, const Vec3& b) {
      return std::atan2(a.cross(b).norm(), a.dot(b));
    };
    out[0] = std::min(65535L, static_cast<long>(std::floor(dist / dist_step)));
    out[1] = std::min(65535L,
                      static_cast<long>(std::floor(ang(n1, dn) / angle_step)));
    out[2] = std::min(65535L,
                      static_cast<long>(std::floor(ang(n2, dn) / angle_step)));
    out[3] = std::min(65535L,
                      static_cast<long>(std::floor(ang(n1, n2) / angle_step)));
    return true;
  };
  auto alpha_of = [](const Vec3& pr, const Vec3& nr, const Vec3& po) {
    const Mat3 r =
        Eigen::Quaterniond::FromTwoVectors(nr, Vec3::UnitX()).toRotationMatrix();
    const Vec3 t = r * (po - pr);
    return std::atan2(t.z(), t.y());
  };

  for (int j : neighbors) {
    if (j == ref) continue;
    std::array<long, 4> fs;
    if (!bucket4(scene.points[ref], scene.normals[ref], scene.points[j],
                 scene.normals[j], fs)) {
      continue;
    }
    const double alpha_s =
        alpha_of(scene.points[ref], scene.normals[ref], scene.points[j]);
    for (std::size_t mi = 0; mi < model_cloud.size(); ++mi) {
      for (std::size_t mj = 0; mj < model_cloud.size(); ++mj) {
        if (mi == mj) continue;
        std::array<long, 4> fm;
        if (!bucket4(model_cloud.points[mi], model_cloud.normals[mi],
                     model_cloud.points[mj], model_cloud.normals[mj], fm)) {
          continue;
        }
        if (fm != fs) continue;
        const double alpha_m =
            static_cast<double>(static_cast<float>(alpha_of(
                model_cloud.points[mi], model_cloud.normals[mi],
                model_cloud.points[mj])));
        double alpha = std::fmod(alpha_s - alpha_m, 2.0 * kPi);
        if (alpha < 0.0) alpha += 2.0 * kPi;
        const int bin = std::min(
            static_cast<int>(alpha / (2.0 * kPi) * n_alpha), n_alpha - 1);
        ++acc[mi * n_alpha + bin];
      }
    }
  }
  return acc;
}

TEST(PpfVote, AccumulatorEqualsBruteForceRecomputation) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937 rng(seed * 31 + 7);
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    std::normal_distribution<double> g;
    PointCloud model_cloud;
    const int n_model = 10 + static_cast<int>(seed) % 15;
    for (int i = 0; i < n_model; ++i) {
      model_cloud.points.emplace_back(u(rng), u(rng), u(rng));
      Vec3 n(g(rng), g(rng), g(rng));
      model_cloud.normals.push_back(n.norm() > 1e-9 ? Vec3(n.normalized())
                                                     : Vec3::UnitZ());
    }
    PointCloud scene;
    const int n_scene = 20 + static_cast<int>(seed) % 31;
    for (int i = 0; i < n_scene; ++i) {
      scene.points.emplace_back(u(rng), u(rng), u(rng));
      Vec3 n(g(rng), g(rng), g(rng));
      scene.normals.push_back(n.norm() > 1e-9 ? Vec3(n.normalized())
                                               : Vec3::UnitZ());
    }
    const double dist_step = 5.0, angle_step = 30.0;
    const PpfModel model = build_ppf_model(model_cloud, dist_step, angle_step);

    std::vector<int> all(scene.size());
    std::iota(all.begin(), all.end(), 0);
    for (int ref : {0, n_scene / 2, n_scene - 1}) {
      const VoteAccumulator acc = ppf_vote(scene, ref, all, model);
      const auto oracle = brute_force_accumulator(
          scene, ref, all, model_cloud, dist_step, angle_step);
      EXPECT_EQ(acc.counts, oracle) << "seed " << seed << " ref " << ref;
    }
  }
}

// ---------------------------------------------------------------------------
// Matching

SurfaceMatchParams test_params() {
  SurfaceMatchParams p;
  p.ref_stride = 5;
  return p;
}

TEST(SurfaceBasedMatch, SelfMatchRecoversIdentity) {
  const PointCloud cloud = sampled_l_bracket(4.0);
  const PpfModel model = build_ppf_model(cloud, 4.0, 12.0);
  const auto results =
      surface_based_match(cloud, model, test_params(), "l_bracket");
  ASSERT_FALSE(results.empty());
  const MatchResult& top = results[0];
  EXPECT_GE(top.score, 0.95);
  EXPECT_LT(top.pose.translation().norm(), 0.5);
  EXPECT_LT(top.pose.rotation_angle_to(RigidTransform::identity()), 0.5);
  for (const auto& r : results) {
    EXPECT_GE(r.score, 0.0);
    EXPECT_LE(r.score, 1.0);
  }
  for (std::size_t i = 1; i < results.size(); ++i) {
    EXPECT_LE(results[i].score, results[i - 1].score);
  }
}

TEST(SurfaceBasedMatch, RecoversRigidMotion) {
  const PointCloud cloud = sampled_l_bracket(4.0);
  const PpfModel model = build_ppf_model(cloud, 4.0, 12.0);
  const RigidTransform gt = RigidTransform::from_axis_angle(
      Vec3(0.2, -0.3, 1.0), 73.0, Vec3(40.0, -25.0, 60.0));
  const PointCloud scene = apply(gt, cloud);
  const auto results =
      surface_based_match(scene, model, test_params(), "l_bracket");
  ASSERT_FALSE(results.empty());
  EXPECT_LT(results[0].pose.translation_distance_to(gt), 2.0);
  EXPECT_LT(results[0].pose.rotation_angle_to(gt), 2.0);
  EXPECT_GE(results[0].score, 0.9);
}

// Rigid-motion equivariance at the argmax level.
TEST(SurfaceBasedMatch, EquivariantUnderSceneMotion) {
  const PointCloud cloud = sampled_l_bracket(4.0);
  const PpfModel model = build_ppf_model(cloud, 4.0, 12.0);
  const auto base = surface_based_match(cloud, model, test_params());
  ASSERT_FALSE(base.empty());
  const RigidTransform t = RigidTransform::from_axis_angle(
      Vec3(1.0, 0.5, -0.2), 41.0, Vec3(-30.0, 15.0, 80.0));
  const auto moved = surface_based_match(apply(t, cloud), model, test_params());
  ASSERT_FALSE(moved.empty());
  const RigidTransform expected = t * base[0].pose;
  EXPECT_LT(moved[0].pose.translation_distance_to(expected),
            0.1 * model.diameter);
  EXPECT_LT(moved[0].pose.rotation_angle_to(expected), 12.0);
}

TEST(SurfaceBasedMatch, EmptySceneThrows) {
  const PpfModel model = build_ppf_model(sampled_l_bracket(8.0), 4.0, 12.0);
  EXPECT_THROW(surface_based_match(PointCloud{}, model), EmptyScene);
}

TEST(EdgeSupportedMatch, EmptyEdgeCloudDegradesToSurfaceScore) {
  const PointCloud cloud = sampled_l_bracket(4.0);
  const WorkpieceModel m = l_bracket();
  const PointCloud model_edges = sample_model_edges(m, 4.0);
  const PpfModel model = build_ppf_model(cloud, 4.0, 12.0);
  const auto surface = surface_based_match(cloud, model, test_params());
  const auto edged = edge_supported_match(cloud, PointCloud{}, model,
                                          model_edges, test_params());
  ASSERT_EQ(surface.size(), edged.size());
  for (std::size_t i = 0; i < surface.size(); ++i) {
    EXPECT_EQ(surface[i].score, edged[i].score);
  }
}

TEST(EdgeSupportedMatch, MatchingEdgesDoNotHurtScore) {
  const PointCloud cloud = sampled_l_bracket(4.0);
  const WorkpieceModel m = l_bracket();
  const PointCloud model_edges = sample_model_edges(m, 4.0);
  const PpfModel model = build_ppf_model(cloud, 4.0, 12.0);
  // The scene's edges are the model's own outline points.
  const auto surface = surface_based_match(cloud, model, test_params());
  const auto edged = edge_supported_match(cloud, model_edges, model,
                                          model_edges, test_params());
  ASSERT_FALSE(surface.empty());
  ASSERT_FALSE(edged.empty());
  EXPECT_GE(edged[0].score, surface[0].score - 0.05);
}

}  // namespace
}  // namespace sheetloc
