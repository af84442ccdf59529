#pragma once

#include <chrono>

#include "sheetloc/core/kdtree.hpp"
#include "sheetloc/core/match_result.hpp"
#include "sheetloc/match3d/icp.hpp"
#include "sheetloc/match3d/ppf.hpp"

namespace sheetloc {

struct SurfaceMatchParams {
  /// Every n-th scene point serves as a voting reference point.
  int ref_stride = 5;
  /// Cap on paired neighbors per reference point (0 = unlimited). When the
  /// radius neighborhood is larger, it is strided down deterministically.
  int max_neighbors = 0;
  /// Pose clustering tolerances; translation defaults to 0.1 x diameter
  /// when <= 0.
  double cluster_translation_tol = 0.0;
  double cluster_rotation_tol_deg = 12.0;
  /// Score tolerance: scene point within this distance of a transformed
  /// model point counts as overlap. Defaults to 2 x dist_step when <= 0.
  double score_tol = 0.0;
  /// Minimum accumulator votes for a reference point to emit a hypothesis.
  std::uint32_t min_votes = 3;
  /// Sparse pose refinement per cluster before scoring (least-squares
  /// alignment iterations against the scene); 0 disables it.
  int refine_iterations = 3;
  std::size_t max_results = 5;
  /// Near-symmetric sheet parts: report the flipped hypothesis as well when
  /// its score is within this margin of the original.
  double flip_score_margin = 0.05;
  /// Blend weight of the edge score in edge-supported matching.
  double edge_weight = 0.5;
  double edge_tol = 0.0;  // defaults to score_tol
};

namespace detail {

inline int ppf_alpha_bins(double angle_step_deg) {
  return std::max(1, static_cast<int>(std::lround(360.0 / angle_step_deg)));
}

struct PoseHypothesis {
  RigidTransform pose;
  std::uint32_t votes = 0;
};

/// Pose from a matched (scene ref, model ref, alpha) triple:
/// p_scene = T_s^-1 . Rot_x(alpha) . T_m . p_model.
inline RigidTransform pose_from_vote(const Vec3& scene_point,
                                     const Vec3& scene_normal,
                                     const Vec3& model_point,
                                     const Vec3& model_normal, double alpha) {
  const Mat3 rs = align_normal_to_x(scene_normal);
  const Mat3 rm = align_normal_to_x(model_normal);
  const Mat3 rx = Eigen::AngleAxisd(alpha, Vec3::UnitX()).toRotationMatrix();
  const Mat3 rot = rs.transpose() * rx * rm;
  const Vec3 trans = scene_point - rot * model_point;
  return RigidTransform(project_to_rotation(rot), trans);
}

}  // namespace detail

/// Voting accumulator for one reference point: counts[model_index * n_alpha
/// + alpha_bin]. Alongside the counts the exact voting angles are summed per
/// cell, so a peak can be turned into a pose without the half-bin
/// quantisation error. Exposed so the brute-force oracle can check the
/// counts exactly.
struct VoteAccumulator {
  std::vector<std::uint32_t> counts;
  std::vector<double> alpha_sums;
  int n_alpha = 0;

  double mean_alpha(std::size_t cell) const {
    return counts[cell] ? alpha_sums[cell] / counts[cell] : 0.0;
  }
};

inline VoteAccumulator ppf_vote(const PointCloud& scene, int ref_index,
                                const std::vector<int>& neighbors,
                                const PpfModel& model) {
  VoteAccumulator acc;
  acc.n_alpha = detail::ppf_alpha_bins(model.angle_step_deg);
  acc.counts.assign(model.cloud.size() * acc.n_alpha, 0);
  acc.alpha_sums.assign(model.cloud.size() * acc.n_alpha, 0.0);
  const Vec3& sp = scene.points[ref_index];
  const Vec3& sn = scene.normals[ref_index];
  for (int j : neighbors) {
    if (j == ref_index) continue;
    const PpfFeature f =
        compute_ppf(sp, sn, scene.points[j], scene.normals[j]);
    if (f.dist < 1e-12) continue;
    const auto* entries = model.lookup(f);
    if (!entries) continue;
    const double alpha_s = ppf_alpha(sp, sn, scene.points[j]);
    for (const auto& e : *entries) {
      double alpha = std::fmod(alpha_s - static_cast<double>(e.alpha),
                               2.0 * kPi);
      if (alpha < 0.0) alpha += 2.0 * kPi;
      const int bin = std::min(
          static_cast<int>(alpha / (2.0 * kPi) * acc.n_alpha),
          acc.n_alpha - 1);
      const std::size_t cell = e.ref_index * acc.n_alpha + bin;
      ++acc.counts[cell];
      acc.alpha_sums[cell] += alpha;
    }
  }
  return acc;
}

/// Fraction of model points whose transformed position has a scene point
/// within `tol` (the open-score reconstruction of the matching score).
inline double surface_overlap_score(const NeighborIndex& scene_index,
                                    const PointCloud& model_cloud,
                                    const RigidTransform& pose, double tol) {
  if (model_cloud.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Vec3& p : model_cloud.points) {
    if (scene_index.has_neighbor_within(pose * p, tol)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(model_cloud.size());
}

namespace detail {

inline std::vector<PoseHypothesis> cluster_poses(
    std::vector<PoseHypothesis> hypotheses, double trans_tol,
    double rot_tol_deg) {
  std::stable_sort(hypotheses.begin(), hypotheses.end(),
                   [](const PoseHypothesis& a, const PoseHypothesis& b) {
                     return a.votes > b.votes;
                   });
  struct Cluster {
    RigidTransform representative;  // highest-vote member
    Eigen::Vector4d q_sum = Eigen::Vector4d::Zero();
    Vec3 t_sum = Vec3::Zero();
    double weight = 0.0;
    std::uint32_t votes = 0;
  };
  // Members join a cluster within the full tolerances, but only members
  // tightly grouped around its best hypothesis contribute to the averaged
  // pose; loose members would otherwise drag it off the true optimum.
  std::vector<Cluster> clusters;
  for (const PoseHypothesis& h : hypotheses) {
    bool assigned = false;
    for (Cluster& cl : clusters) {
      if (cl.representative.translation_distance_to(h.pose) <= trans_tol &&
          cl.representative.rotation_angle_to(h.pose) <= rot_tol_deg) {
        if (cl.representative.translation_distance_to(h.pose) <=
                trans_tol / 3.0 &&
            cl.representative.rotation_angle_to(h.pose) <= rot_tol_deg / 3.0) {
          const double w = h.votes;
          Eigen::Quaterniond q(h.pose.rotation());
          Eigen::Vector4d qv(q.w(), q.x(), q.y(), q.z());
          if (qv.dot(cl.q_sum) < 0.0) qv = -qv;
          cl.q_sum += w * qv;
          cl.t_sum += w * h.pose.translation();
          cl.weight += w;
        }
        cl.votes += h.votes;
        assigned = true;
        break;
      }
    }
    if (!assigned) {
      Cluster cl;
      cl.representative = h.pose;
      Eigen::Quaterniond q(h.pose.rotation());
      cl.q_sum = h.votes * Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
      cl.t_sum = h.votes * h.pose.translation();
      cl.weight = h.votes;
      cl.votes = h.votes;
      clusters.push_back(cl);
    }
  }
  std::vector<PoseHypothesis> out;
  out.reserve(clusters.size());
  for (const Cluster& cl : clusters) {
    Eigen::Vector4d qv = cl.q_sum;
    if (qv.norm() < 1e-12) continue;
    qv.normalize();
    const Eigen::Quaterniond q(qv[0], qv[1], qv[2], qv[3]);
    PoseHypothesis h;
    h.pose = RigidTransform(q.toRotationMatrix(), cl.t_sum / cl.weight);
    h.votes = cl.votes;
    out.push_back(h);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PoseHypothesis& a, const PoseHypothesis& b) {
                     return a.votes > b.votes;
                   });
  return out;
}

/// Flip of a thin sheet part: a half turn about the x axis through the
/// model cloud's centroid.
inline RigidTransform sheet_flip_transform(const PointCloud& model_cloud) {
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : model_cloud.points) centroid += p;
  if (!model_cloud.empty()) centroid /= static_cast<double>(model_cloud.size());
  const RigidTransform flip = RigidTransform::rot_x(180.0);
  return RigidTransform::from_translation(centroid) * flip *
         RigidTransform::from_translation(-centroid);
}

}  // namespace detail

/// Surface-based (point-pair-feature) matching: voting over sampled scene
/// reference points, pose clustering, and overlap scoring. Results are
/// sorted by descending score; scores live in [0, 1]. Deterministic.
inline std::vector<MatchResult> surface_based_match(
    const PointCloud& scene, const PpfModel& model,
    const SurfaceMatchParams& params = {},
    const std::string& model_id = "model") {
  const auto t_start = std::chrono::steady_clock::now();
  if (scene.empty()) throw EmptyScene("surface_based_match: empty scene");
  if (!scene.has_normals()) {
    throw MissingChannel("surface_based_match: scene has no normals");
  }

  const double trans_tol = params.cluster_translation_tol > 0.0
                               ? params.cluster_translation_tol
                               : 0.1 * model.diameter;
  const double score_tol =
      params.score_tol > 0.0 ? params.score_tol : 2.0 * model.dist_step;
  const int n_alpha = detail::ppf_alpha_bins(model.angle_step_deg);

  NeighborIndex scene_index(scene);
  std::vector<detail::PoseHypothesis> hypotheses;

  const int stride = std::max(1, params.ref_stride);
  for (int r = 0; r < static_cast<int>(scene.size()); r += stride) {
    std::vector<int> neighbors =
        scene_index.radius(scene.points[r], model.diameter);
    if (params.max_neighbors > 0 &&
        static_cast<int>(neighbors.size()) > params.max_neighbors) {
      std::vector<int> reduced;
      reduced.reserve(params.max_neighbors);
      const double step = static_cast<double>(neighbors.size()) /
                          params.max_neighbors;
      for (int k = 0; k < params.max_neighbors; ++k) {
        reduced.push_back(neighbors[static_cast<std::size_t>(k * step)]);
      }
      neighbors.swap(reduced);
    }
    if (neighbors.size() < 2) continue;

    const VoteAccumulator acc = ppf_vote(scene, r, neighbors, model);
    std::uint32_t best = 0;
    std::size_t best_cell = 0;
    for (std::size_t c = 0; c < acc.counts.size(); ++c) {
      if (acc.counts[c] > best) {
        best = acc.counts[c];
        best_cell = c;
      }
    }
    if (best < params.min_votes) continue;
    const std::size_t model_index = best_cell / n_alpha;
    const double alpha = acc.mean_alpha(best_cell);
    detail::PoseHypothesis h;
    h.pose = detail::pose_from_vote(
        scene.points[r], scene.normals[r], model.cloud.points[model_index],
        model.cloud.normals[model_index], alpha);
    h.votes = best;
    hypotheses.push_back(h);
  }

  auto clusters = detail::cluster_poses(std::move(hypotheses), trans_tol,
                                        params.cluster_rotation_tol_deg);
  if (clusters.size() > 2 * params.max_results) {
    clusters.resize(2 * params.max_results);
  }

  std::vector<MatchResult> results;
  for (const auto& cl : clusters) {
    MatchResult res;
    res.model_id = model_id;
    res.pose = cl.pose;
    if (params.refine_iterations > 0) {
      try {
        res.pose = icp_refine(scene, model.cloud, cl.pose,
                              params.refine_iterations, 1e-8, 2.0 * score_tol)
                       .pose;
      } catch (const NoCorrespondences&) {
        // keep the unrefined cluster pose
      }
    }
    res.score = surface_overlap_score(scene_index, model.cloud, res.pose,
                                      score_tol);
    results.push_back(res);
  }

  // Near-symmetric thin parts: surface a flip hypothesis when it scores
  // within the margin of the original.
  if (!results.empty() && params.flip_score_margin > 0.0) {
    const RigidTransform flip = detail::sheet_flip_transform(model.cloud);
    const std::size_t n_orig = std::min<std::size_t>(results.size(), 3);
    for (std::size_t i = 0; i < n_orig; ++i) {
      const RigidTransform flipped = results[i].pose * flip;
      bool duplicate = false;
      for (const auto& other : results) {
        if (other.pose.translation_distance_to(flipped) <= trans_tol &&
            other.pose.rotation_angle_to(flipped) <=
                params.cluster_rotation_tol_deg) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;
      const double flip_score =
          surface_overlap_score(scene_index, model.cloud, flipped, score_tol);
      if (std::abs(flip_score - results[i].score) < params.flip_score_margin) {
        MatchResult res;
        res.model_id = model_id;
        res.pose = flipped;
        res.score = flip_score;
        results.push_back(res);
      }
    }
  }

  std::stable_sort(results.begin(), results.end(),
                   [](const MatchResult& a, const MatchResult& b) {
                     return a.score > b.score;
                   });
  if (results.size() > params.max_results) results.resize(params.max_results);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  for (auto& r : results) r.duration_s = elapsed;
  return results;
}

/// Fraction of model edge points with a scene edge point within `tol`.
inline double edge_overlap_score(const NeighborIndex& edge_index,
                                 const PointCloud& model_edges,
                                 const RigidTransform& pose, double tol) {
  if (model_edges.empty() || edge_index.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Vec3& p : model_edges.points) {
    if (edge_index.has_neighbor_within(pose * p, tol)) ++hits;
  }
  return static_cast<double>(hits) /
         static_cast<double>(model_edges.size());
}

/// Surface-based matching with the final score blended from surface overlap
/// and edge overlap against a depth-edge cloud. With an empty edge cloud the
/// score degrades to the surface score exactly.
inline std::vector<MatchResult> edge_supported_match(
    const PointCloud& scene, const PointCloud& edges, const PpfModel& model,
    const PointCloud& model_edges, const SurfaceMatchParams& params = {},
    const std::string& model_id = "model") {
  const auto t_start = std::chrono::steady_clock::now();
  std::vector<MatchResult> results =
      surface_based_match(scene, model, params, model_id);
  if (!edges.empty() && !model_edges.empty() && params.edge_weight > 0.0) {
    const double tol = params.edge_tol > 0.0
                           ? params.edge_tol
                           : (params.score_tol > 0.0 ? params.score_tol
                                                     : 2.0 * model.dist_step);
    NeighborIndex edge_index(edges);
    const double w = std::clamp(params.edge_weight, 0.0, 1.0);
    for (MatchResult& r : results) {
      const double es = edge_overlap_score(edge_index, model_edges, r.pose,
                                           tol);
      r.score = (1.0 - w) * r.score + w * es;
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const MatchResult& a, const MatchResult& b) {
                       return a.score > b.score;
                     });
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  for (auto& r : results) r.duration_s = elapsed;
  return results;
}

}  // namespace sheetloc
