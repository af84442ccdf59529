#pragma once

#include <chrono>

#include "sheetloc/calib/plate_pose.hpp"
#include "sheetloc/core/ply_io.hpp"
#include "sheetloc/match2d/contrast_image.hpp"
#include "sheetloc/match2d/lift.hpp"
#include "sheetloc/match3d/matcher.hpp"
#include "sheetloc/pipeline/config.hpp"
#include "sheetloc/pipeline/model_registry.hpp"
#include "sheetloc/refine/depth_edges.hpp"
#include "sheetloc/refine/filters.hpp"
#include "sheetloc/synth/render.hpp"

namespace sheetloc {

/// Everything a pipeline run reports: matches (best first), per-stage
/// filter bookkeeping, and the wall time.
struct PoseReport {
  std::vector<MatchResult> matches;
  std::vector<FilterReport> stage_reports;
  double total_duration_s = 0.0;
  bool found = false;  // any match at or above min_score
};

inline nlohmann::json report_to_json(const PoseReport& report) {
  nlohmann::json matches = nlohmann::json::array();
  for (const MatchResult& m : report.matches) {
    matches.push_back({{"model_id", m.model_id},
                       {"pose", detail::transform_to_json(m.pose)},
                       {"score", m.score},
                       {"duration_s", m.duration_s}});
  }
  nlohmann::json stages = nlohmann::json::array();
  for (const FilterReport& r : report.stage_reports) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : r.parameters) params[k] = v;
    stages.push_back({{"stage", r.filter},
                      {"points_in", r.points_in},
                      {"points_out", r.points_out},
                      {"duration_s", r.duration_s},
                      {"parameters", params}});
  }
  return {{"schema_version", 1},
          {"found", report.found},
          {"matches", matches},
          {"stages", stages},
          {"total_duration_s", report.total_duration_s}};
}

namespace detail {

struct PipelineState {
  PointCloud cloud;
  std::optional<DepthImage> depth_image;
  std::optional<DepthImage> intensity_image;
  std::map<std::string, WorkpieceModel> registry;
  std::vector<Plane> planes;
  PointCloud edges;
  std::optional<RigidTransform> scene_frame;  // cam_H_scene
  std::uint64_t seed = 1;
};

inline Vec3 json_vec3(const nlohmann::json& a) {
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

inline void run_stage(PipelineState& state, const nlohmann::json& stage,
                      double min_score, PoseReport& report) {
  const std::string name = stage["stage"].get<std::string>();

  if (name == "estimate_normals") {
    state.cloud = estimate_normals(state.cloud, stage["k"].get<int>());
    return;
  }
  if (name == "z_band") {
    RigidTransform frame;
    if (stage.value("use_scene_frame", false)) {
      if (!state.scene_frame) {
        throw InvalidArgument(
            "z_band: use_scene_frame set but no scene frame (run "
            "calibrate_plate first)");
      }
      frame = *state.scene_frame;
    } else if (stage.contains("frame")) {
      frame = transform_from_json(stage["frame"]);
    }
    auto [kept, rep] = z_band_filter(state.cloud, frame,
                                     stage["z_min"].get<double>(),
                                     stage["z_max"].get<double>());
    state.cloud = std::move(kept);
    report.stage_reports.push_back(rep);
    return;
  }
  if (name == "intensity") {
    auto [kept, rep] = intensity_filter(state.cloud, stage["lo"].get<double>(),
                                        stage["hi"].get<double>());
    state.cloud = std::move(kept);
    report.stage_reports.push_back(rep);
    return;
  }
  if (name == "normal_direction") {
    auto [kept, rep] = normal_direction_filter(
        state.cloud, json_vec3(stage["axis"]).normalized(),
        stage["max_angle_deg"].get<double>(), stage.value("signed", false));
    state.cloud = std::move(kept);
    report.stage_reports.push_back(rep);
    return;
  }
  if (name == "voxel_downsample") {
    const std::size_t before = state.cloud.size();
    state.cloud = voxel_downsample(state.cloud, stage["cell"].get<double>());
    FilterReport rep;
    rep.filter = "voxel_downsample";
    rep.points_in = before;
    rep.points_out = state.cloud.size();
    rep.parameters["cell"] = fmt(stage["cell"].get<double>());
    report.stage_reports.push_back(rep);
    return;
  }
  if (name == "fit_planes") {
    RansacOptions opt;
    opt.seed = static_cast<unsigned>(state.seed);
    state.planes = fit_planes_ransac(
        state.cloud, stage["dist_tol"].get<double>(),
        stage["min_inliers"].get<std::size_t>(),
        stage["max_planes"].get<std::size_t>(), opt);
    FilterReport rep;
    rep.filter = "fit_planes";
    rep.points_in = state.cloud.size();
    rep.points_out = state.cloud.size();
    rep.parameters["planes_found"] = std::to_string(state.planes.size());
    report.stage_reports.push_back(rep);
    return;
  }
  if (name == "remove_near_planes") {
    auto [kept, rep] = remove_near_planes(state.cloud, state.planes,
                                          stage["dist"].get<double>());
    state.cloud = std::move(kept);
    report.stage_reports.push_back(rep);
    return;
  }
  if (name == "background_subtract") {
    const PointCloud reference =
        read_ply(stage["reference"].get<std::string>());
    auto [kept, rep] =
        background_subtract(state.cloud, reference,
                            stage["radius"].get<double>());
    state.cloud = std::move(kept);
    report.stage_reports.push_back(rep);
    return;
  }
  if (name == "outlier_removal") {
    auto [kept, rep] = statistical_outlier_removal(
        state.cloud, stage["k"].get<int>(),
        stage["stddev_mult"].get<double>());
    state.cloud = std::move(kept);
    report.stage_reports.push_back(rep);
    return;
  }
  if (name == "extract_edges") {
    if (!state.depth_image) {
      throw InvalidArgument("extract_edges: pipeline has no depth image");
    }
    state.edges = extract_depth_edges(*state.depth_image,
                                      stage["min_amplitude"].get<double>());
    return;
  }
  if (name == "calibrate_plate") {
    if (!state.intensity_image) {
      throw InvalidArgument(
          "calibrate_plate: pipeline has no intensity image");
    }
    BeaconPlate plate;
    for (int i = 0; i < 3; ++i) {
      plate.beacons[i] = Vec2(stage["beacons"][i][0].get<double>(),
                              stage["beacons"][i][1].get<double>());
    }
    const auto centroids = detect_beacons(*state.intensity_image, plate);
    PlatePoseOptions opt;
    if (stage.value("use_support_plane", true) && !state.cloud.empty()) {
      RansacOptions ransac;
      ransac.seed = static_cast<unsigned>(state.seed);
      const auto planes = fit_planes_ransac(state.cloud, 1.0,
                                            state.cloud.size() / 4, 1, ransac);
      if (!planes.empty()) opt.support = planes[0];
    }
    const RigidTransform cam_H_cal =
        plate_pose(centroids, plate, state.intensity_image->camera, opt);
    RigidTransform cal_H_scene;
    if (stage.contains("cal_H_scene")) {
      cal_H_scene = transform_from_json(stage["cal_H_scene"]);
    }
    state.scene_frame = scene_frame_from_plate(cam_H_cal, cal_H_scene);
    return;
  }
  if (name == "match_surface") {
    if (state.cloud.empty()) {
      throw EmptyScene("match_surface: the refined cloud is empty");
    }
    const std::string model_id = stage["model"].get<std::string>();
    const auto it = state.registry.find(model_id);
    if (it == state.registry.end()) {
      throw InvalidArgument("match_surface: unknown model '" + model_id + "'");
    }
    WorkpieceModel model = it->second;
    const double sample_step =
        stage.value("sample_step", model.diameter() / 18.0);
    prepare_model(model, sample_step);
    const double dist_step = stage.value("dist_step", sample_step);
    const PpfModel ppf =
        build_ppf_model(model.sampled_cloud, dist_step,
                        stage.value("angle_step_deg", 12.0));
    SurfaceMatchParams params;
    params.ref_stride = stage.value("ref_stride", 5);
    params.max_neighbors = stage.value("max_neighbors", 150);
    params.max_results = stage.value("max_results", 5);
    PointCloud scene = state.cloud;
    if (!scene.has_normals()) scene = estimate_normals(scene, 8);
    std::vector<MatchResult> results;
    if (stage.value("edge_supported", false) && !state.edges.empty()) {
      results = edge_supported_match(scene, state.edges, ppf,
                                     model.edge_cloud, params, model_id);
    } else {
      results = surface_based_match(scene, ppf, params, model_id);
    }
    if (stage.value("icp", true)) {
      const double corr =
          stage.value("icp_corr_dist", 3.0 * dist_step);
      // Depth edges pin the in-plane pose of thin parts during the final
      // refinement; extract them once per pipeline when an image exists.
      if (state.edges.empty() && state.depth_image) {
        try {
          state.edges = extract_depth_edges(*state.depth_image,
                                            0.8 * model.thickness);
        } catch (const Error&) {
        }
      }
      for (MatchResult& r : results) {
        try {
          const IcpResult refined = icp_refine_with_edges(
              scene, model.sampled_cloud, state.edges, model.edge_cloud,
              r.pose, stage.value("icp_max_iter", 40), 1e-6, corr);
          r.pose = refined.pose;
        } catch (const NoCorrespondences&) {
        }
      }
    }
    report.matches.insert(report.matches.end(), results.begin(),
                          results.end());
    return;
  }
  if (name == "match_shape") {
    if (!state.scene_frame) {
      throw InvalidArgument(
          "match_shape: no scene frame; run calibrate_plate or provide one "
          "via z_band first");
    }
    const DepthImage img = make_contrast_depth_image(
        state.cloud, *state.scene_frame, stage["mm_per_px"].get<double>());
    std::vector<std::string> ids;
    if (stage.contains("models")) {
      for (const auto& id : stage["models"]) {
        ids.push_back(id.get<std::string>());
      }
    } else {
      for (const auto& [id, m] : state.registry) ids.push_back(id);
    }
    // Support plane: the dominant fitted plane if present, else the scene
    // frame's z=0.
    Plane support;
    if (!state.planes.empty()) {
      support = state.planes[0];
    } else {
      support.normal = state.scene_frame->rotate(Vec3::UnitZ());
      support.offset = support.normal.dot(state.scene_frame->translation());
    }
    for (const std::string& id : ids) {
      const auto it = state.registry.find(id);
      if (it == state.registry.end()) {
        throw InvalidArgument("match_shape: unknown model '" + id + "'");
      }
      const auto t_start = std::chrono::steady_clock::now();
      const TemplatePyramid tpl = build_template(
          it->second, stage.value("theta_step_deg", 2.0),
          stage["mm_per_px"].get<double>(), stage.value("levels", 3));
      const auto planar = shape_match(img, tpl, min_score,
                                      stage.value("max_matches", 4));
      for (const PlanarMatch& pm : planar) {
        MatchResult res = lift_to_6d(pm, img, support, it->second);
        res.duration_s = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
        report.matches.push_back(res);
      }
    }
    std::stable_sort(report.matches.begin(), report.matches.end(),
                     [](const MatchResult& a, const MatchResult& b) {
                       return a.score > b.score;
                     });
    return;
  }
  throw InvalidArgument("unknown stage '" + name + "'");
}

}  // namespace detail

/// Runs a list of refinement stages over a cloud and returns the refined
/// cloud with the per-stage reports. Matching stages are rejected here.
inline std::pair<PointCloud, std::vector<FilterReport>> refine_cloud(
    const PointCloud& cloud, const std::vector<nlohmann::json>& stages,
    std::uint64_t seed = 1) {
  detail::PipelineState state;
  state.cloud = cloud;
  state.seed = seed;
  PoseReport report;
  for (const auto& stage : stages) {
    const std::string name = stage.at("stage").get<std::string>();
    if (name.rfind("match", 0) == 0 || name == "calibrate_plate") {
      throw InvalidArgument("refine_cloud: '" + name +
                            "' is not a refinement stage");
    }
    detail::run_stage(state, stage, 0.0, report);
  }
  return {std::move(state.cloud), std::move(report.stage_reports)};
}

/// Executes a validated pipeline config: loads or renders the input, runs
/// every stage in order, and reports matches plus per-stage bookkeeping.
/// Deterministic for a fixed config and seed (durations aside).
inline PoseReport run_pipeline(const PipelineConfig& config) {
  validate_pipeline(config);
  const auto t_start = std::chrono::steady_clock::now();

  detail::PipelineState state;
  state.seed = config.seed;
  if (!config.models_path.empty()) {
    state.registry = load_registry(config.models_path);
  }
  if (!config.input_scene.empty()) {
    std::ifstream in(config.input_scene);
    if (!in) throw ParseError("cannot open scene spec " + config.input_scene);
    SceneSpec spec = scene_from_json(nlohmann::json::parse(in));
    spec.seed = config.seed;
    const RenderResult rendered = render(spec, state.registry);
    state.cloud = rendered.cloud;
    state.depth_image = rendered.depth;
    state.intensity_image = rendered.intensity;
    state.scene_frame = spec.camera_pose.inverse();
  }
  if (!config.input_cloud.empty()) {
    state.cloud = read_ply(config.input_cloud);
  }
  if (!config.input_image.empty()) {
    DepthImage img = read_pgm(config.input_image);
    if (img.kind == ImageKind::depth) {
      state.depth_image = img;
    } else {
      state.intensity_image = img;
    }
    if (state.cloud.empty() && img.kind == ImageKind::depth) {
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          if (img.is_valid(x, y)) {
            state.cloud.points.push_back(img.back_project(x, y));
          }
        }
      }
    }
  }
  if (state.cloud.empty() && !state.depth_image && !state.intensity_image) {
    throw EmptyScene("pipeline input is empty");
  }

  PoseReport report;
  for (const auto& stage : config.stages) {
    detail::run_stage(state, stage, config.min_score, report);
  }
  for (const MatchResult& m : report.matches) {
    if (m.score >= config.min_score) report.found = true;
  }
  report.total_duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  if (!config.output_path.empty()) {
    std::ofstream out(config.output_path);
    if (!out) throw Error("cannot open " + config.output_path);
    out << report_to_json(report).dump(2) << "\n";
  }
  return report;
}

}  // namespace sheetloc
