#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sheetloc/core/depth_image.hpp"

namespace sheetloc {

namespace detail {

inline nlohmann::json transform_to_json(const RigidTransform& t) {
  const Mat4 m = t.to_matrix();
  nlohmann::json arr = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) arr.push_back(m(r, c));
  }
  return arr;
}

inline RigidTransform transform_from_json(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.size() != 16) {
    throw ParseError("pose must be a 16-element row-major array");
  }
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = arr[4 * r + c].get<double>();
  }
  return RigidTransform::from_matrix(m);
}

inline nlohmann::json camera_to_json(const CameraModel& cam) {
  return nlohmann::json{{"focal_length_px", cam.focal_length_px},
                        {"principal_point", {cam.principal_point.x(),
                                             cam.principal_point.y()}},
                        {"width", cam.width},
                        {"height", cam.height},
                        {"z_min", cam.z_min},
                        {"z_max", cam.z_max}};
}

inline CameraModel camera_from_json(const nlohmann::json& j) {
  CameraModel cam;
  cam.focal_length_px = j.at("focal_length_px").get<double>();
  cam.principal_point =
      Vec2(j.at("principal_point")[0].get<double>(),
           j.at("principal_point")[1].get<double>());
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.z_min = j.at("z_min").get<double>();
  cam.z_max = j.at("z_max").get<double>();
  return cam;
}

}  // namespace detail

/// Writes a 16-bit P2 PGM plus a JSON sidecar (`path` + ".json") holding the
/// camera model, kind, value range and grid metadata. Grey level 0 is the
/// invalid-pixel sentinel; valid values are scaled into [1, 65535].
inline void write_pgm(const DepthImage& img, const std::string& path) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    if (!img.valid[i]) continue;
    lo = std::min(lo, img.values[i]);
    hi = std::max(hi, img.values[i]);
  }
  const bool any_valid = lo <= hi;
  if (!any_valid) {
    lo = 0.0;
    hi = 1.0;
  }
  const double span = hi > lo ? hi - lo : 1.0;

  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "P2\n" << img.width << " " << img.height << "\n65535\n";
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int g = 0;
      if (img.is_valid(x, y)) {
        g = 1 + static_cast<int>(
                    std::lround((img.at(x, y) - lo) / span * 65534.0));
        g = std::clamp(g, 1, 65535);
      }
      out << g << (x + 1 == img.width ? "\n" : " ");
    }
  }
  if (!out) throw Error("write failed: " + path);

  nlohmann::json meta{
      {"schema_version", 1},
      {"kind", img.kind == ImageKind::depth ? "depth" : "intensity"},
      {"projection", img.projection == ProjectionKind::perspective
                         ? "perspective"
                         : "orthographic"},
      {"sentinel", 0},
      {"value_min", lo},
      {"value_max", hi},
      {"mm_per_px", img.mm_per_px},
      {"depth_offset", img.depth_offset},
      {"depth_scale", img.depth_scale},
      {"camera", detail::camera_to_json(img.camera)},
  };
  if (img.cam_pose) meta["cam_pose"] = detail::transform_to_json(*img.cam_pose);
  std::ofstream meta_out(path + ".json");
  if (!meta_out) throw Error("cannot open " + path + ".json for writing");
  meta_out << meta.dump(2) << "\n";
}

inline DepthImage read_pgm(const std::string& path) {
  std::ifstream meta_in(path + ".json");
  if (!meta_in) throw ParseError("missing sidecar " + path + ".json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad sidecar JSON: ") + e.what());
  }

  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2") throw ParseError("expected P2 PGM");
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (!in || w <= 0 || h <= 0) throw ParseError("bad PGM dimensions");
  if (maxval != 65535) throw ParseError("expected 16-bit PGM (maxval 65535)");

  DepthImage img = DepthImage::make(
      w, h, meta.at("kind").get<std::string>() == "depth"
                ? ImageKind::depth
                : ImageKind::intensity);
  img.projection =
      meta.at("projection").get<std::string>() == "perspective"
          ? ProjectionKind::perspective
          : ProjectionKind::orthographic;
  img.mm_per_px = meta.at("mm_per_px").get<double>();
  img.depth_offset = meta.value("depth_offset", 0.0);
  img.depth_scale = meta.value("depth_scale", 1.0);
  img.camera = detail::camera_from_json(meta.at("camera"));
  if (meta.contains("cam_pose")) {
    img.cam_pose = detail::transform_from_json(meta.at("cam_pose"));
  }

  const double lo = meta.at("value_min").get<double>();
  const double hi = meta.at("value_max").get<double>();
  const double span = hi > lo ? hi - lo : 1.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int g = 0;
      if (!(in >> g)) throw ParseError("truncated PGM pixel data");
      if (g == 0) continue;
      img.set(x, y, lo + (g - 1) / 65534.0 * span);
    }
  }
  return img;
}

}  // namespace sheetloc
