#pragma once

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "sheetloc/match3d/workpiece.hpp"

namespace sheetloc {

/// Registry file: {"models": [{"id": ..., "outline": [[x,y],...],
/// "thickness": mm}, ...]}.
inline std::map<std::string, WorkpieceModel> registry_from_json(
    const nlohmann::json& j) {
  std::map<std::string, WorkpieceModel> out;
  for (const auto& item : j.at("models")) {
    WorkpieceModel m;
    m.id = item.at("id").get<std::string>();
    for (const auto& v : item.at("outline")) {
      m.outline.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    m.thickness = item.at("thickness").get<double>();
    m.validate();
    if (out.count(m.id)) {
      throw ParseError("duplicate model id '" + m.id + "'");
    }
    out[m.id] = std::move(m);
  }
  return out;
}

inline nlohmann::json registry_to_json(
    const std::map<std::string, WorkpieceModel>& registry) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& [id, m] : registry) {
    nlohmann::json outline = nlohmann::json::array();
    for (const Vec2& v : m.outline) outline.push_back({v.x(), v.y()});
    models.push_back(
        {{"id", id}, {"outline", outline}, {"thickness", m.thickness}});
  }
  return {{"schema_version", 1}, {"models", models}};
}

inline std::map<std::string, WorkpieceModel> load_registry(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model registry " + path);
  try {
    return registry_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model registry " + path + ": " + e.what());
  }
}

inline void save_registry(const std::map<std::string, WorkpieceModel>& reg,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << registry_to_json(reg).dump(2) << "\n";
}

}  // namespace sheetloc
