#pragma once

#include <nlohmann/json.hpp>

#include "sheetloc/calib/hand_eye.hpp"
#include "sheetloc/core/pgm_io.hpp"

namespace sheetloc {

/// Calibration session: {"samples": [{"timestamp": ..., "base_H_tool":
/// [16], "cam_H_cal": [16]}, ...]} with row-major 4x4 poses.
inline nlohmann::json session_to_json(const std::vector<HandEyeSample>& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const HandEyeSample& sample : s) {
    arr.push_back({{"timestamp", sample.timestamp},
                   {"base_H_tool", detail::transform_to_json(sample.base_H_tool)},
                   {"cam_H_cal", detail::transform_to_json(sample.cam_H_cal)}});
  }
  return {{"schema_version", 1}, {"samples", arr}};
}

inline std::vector<HandEyeSample> session_from_json(const nlohmann::json& j) {
  std::vector<HandEyeSample> out;
  for (const auto& item : j.at("samples")) {
    HandEyeSample s;
    s.timestamp = item.value("timestamp", "");
    s.base_H_tool = detail::transform_from_json(item.at("base_H_tool"));
    s.cam_H_cal = detail::transform_from_json(item.at("cam_H_cal"));
    out.push_back(s);
  }
  return out;
}

}  // namespace sheetloc
