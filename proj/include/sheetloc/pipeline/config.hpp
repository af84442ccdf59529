#pragma once

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "sheetloc/core/error.hpp"

namespace sheetloc {

/// Declarative pipeline: an input (cloud, image or synthetic scene), an
/// ordered stage list, and a model registry. Single JSON file, explicit
/// seed, validated before anything executes.
struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string input_cloud;    // PLY path
  std::string input_image;    // PGM path (with .json sidecar)
  std::string input_scene;    // SceneSpec JSON path (rendered on the fly)
  std::string models_path;    // registry JSON
  std::string output_path;    // report JSON (empty: stdout only)
  double min_score = 0.5;     // found/not-found threshold for exit codes
  std::vector<nlohmann::json> stages;
};

namespace detail {

struct ParamSpec {
  const char* name;
  const char* type;  // "number", "integer", "bool", "string", "vec3", "mat4"
  bool required;
};

inline const std::map<std::string, std::vector<ParamSpec>>& stage_schemas() {
  static const std::map<std::string, std::vector<ParamSpec>> schemas = {
      {"estimate_normals", {{"k", "integer", true}}},
      {"z_band",
       {{"z_min", "number", true},
        {"z_max", "number", true},
        {"frame", "mat4", false},
        {"use_scene_frame", "bool", false}}},
      {"intensity", {{"lo", "number", true}, {"hi", "number", true}}},
      {"normal_direction",
       {{"axis", "vec3", true},
        {"max_angle_deg", "number", true},
        {"signed", "bool", false}}},
      {"voxel_downsample", {{"cell", "number", true}}},
      {"fit_planes",
       {{"dist_tol", "number", true},
        {"min_inliers", "integer", true},
        {"max_planes", "integer", true}}},
      {"remove_near_planes", {{"dist", "number", true}}},
      {"background_subtract",
       {{"reference", "string", true}, {"radius", "number", true}}},
      {"outlier_removal",
       {{"k", "integer", true}, {"stddev_mult", "number", true}}},
      {"extract_edges", {{"min_amplitude", "number", true}}},
      {"calibrate_plate",
       {{"beacons", "beacons", true},
        {"cal_H_scene", "mat4", false},
        {"use_support_plane", "bool", false}}},
      {"match_surface",
       {{"model", "string", true},
        {"sample_step", "number", false},
        {"dist_step", "number", false},
        {"angle_step_deg", "number", false},
        {"ref_stride", "integer", false},
        {"max_neighbors", "integer", false},
        {"max_results", "integer", false},
        {"edge_supported", "bool", false},
        {"icp", "bool", false},
        {"icp_max_iter", "integer", false},
        {"icp_corr_dist", "number", false}}},
      {"match_shape",
       {{"mm_per_px", "number", true},
        {"theta_step_deg", "number", false},
        {"levels", "integer", false},
        {"max_matches", "integer", false},
        {"models", "string_list", false}}},
  };
  return schemas;
}

inline bool type_matches(const nlohmann::json& v, const std::string& type) {
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "bool") return v.is_boolean();
  if (type == "string") return v.is_string();
  if (type == "vec3") return v.is_array() && v.size() == 3;
  if (type == "mat4") return v.is_array() && v.size() == 16;
  if (type == "string_list") return v.is_array();
  if (type == "beacons") return v.is_array() && v.size() == 3;
  return false;
}

}  // namespace detail

/// Validates the stage list against the stage schemas. Throws
/// InvalidArgument with a stage-level message on the first problem.
inline void validate_pipeline(const PipelineConfig& config) {
  const auto& schemas = detail::stage_schemas();
  if (config.input_cloud.empty() && config.input_image.empty() &&
      config.input_scene.empty()) {
    throw InvalidArgument("pipeline config: no input given");
  }
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const nlohmann::json& stage = config.stages[i];
    if (!stage.is_object() || !stage.contains("stage") ||
        !stage["stage"].is_string()) {
      throw InvalidArgument("stage " + std::to_string(i) +
                            ": missing 'stage' name");
    }
    const std::string name = stage["stage"].get<std::string>();
    const auto it = schemas.find(name);
    if (it == schemas.end()) {
      throw InvalidArgument("stage " + std::to_string(i) + ": unknown stage '" +
                            name + "'");
    }
    std::set<std::string> known{"stage"};
    for (const auto& spec : it->second) {
      known.insert(spec.name);
      if (stage.contains(spec.name)) {
        if (!detail::type_matches(stage[spec.name], spec.type)) {
          throw InvalidArgument("stage " + std::to_string(i) + " (" + name +
                                "): parameter '" + spec.name + "' must be a " +
                                spec.type);
        }
      } else if (spec.required) {
        throw InvalidArgument("stage " + std::to_string(i) + " (" + name +
                              "): missing required parameter '" + spec.name +
                              "'");
      }
    }
    for (const auto& [key, value] : stage.items()) {
      if (!known.count(key)) {
        throw InvalidArgument("stage " + std::to_string(i) + " (" + name +
                              "): unknown parameter '" + key + "'");
      }
    }
  }
}

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig config;
  config.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("input")) {
    const auto& in = j["input"];
    config.input_cloud = in.value("cloud", "");
    config.input_image = in.value("image", "");
    config.input_scene = in.value("scene", "");
  }
  config.models_path = j.value("models", "");
  config.output_path = j.value("output", "");
  config.min_score = j.value("min_score", 0.5);
  for (const auto& stage : j.value("stages", nlohmann::json::array())) {
    config.stages.push_back(stage);
  }
  validate_pipeline(config);
  return config;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open pipeline config " + path);
  try {
    return pipeline_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("pipeline config " + path + ": " + e.what());
  }
}

}  // namespace sheetloc
