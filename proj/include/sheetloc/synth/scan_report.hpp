#pragma once

#include "sheetloc/synth/render.hpp"

namespace sheetloc {

/// Per-part scanning-configuration check: range, full visibility and pixel
/// density over the part's outline area.
struct ScanPoseReport {
  struct Entry {
    std::string model_id;
    bool in_range = false;
    bool fully_visible = false;
    double pixel_density = 0.0;  // px per mm^2 of outline area
    std::size_t visible_pixels = 0;
  };
  std::vector<Entry> parts;
};

/// Evaluates each part placement against the camera: whether its corner
/// points all fall inside the scanning distance range, whether they all
/// project inside the image, and how many pixels per square millimetre the
/// part actually covers in a render of the scene.
inline ScanPoseReport scan_pose_report(
    const SceneSpec& spec,
    const std::map<std::string, WorkpieceModel>& registry) {
  ScanPoseReport report;
  if (spec.parts.empty()) return report;

  const RenderResult rendered = render(spec, registry);
  const RigidTransform scene_to_cam = spec.camera_pose.inverse();

  for (std::size_t i = 0; i < spec.parts.size(); ++i) {
    const auto it = registry.find(spec.parts[i].model_id);
    const WorkpieceModel& model = it->second;
    ScanPoseReport::Entry e;
    e.model_id = spec.parts[i].model_id;
    e.in_range = true;
    e.fully_visible = true;
    const double half = model.thickness / 2.0;
    for (const Vec2& c2 : model.ccw_outline()) {
      for (double z : {-half, half}) {
        const Vec3 p_cam =
            scene_to_cam * (spec.parts[i].pose * Vec3(c2.x(), c2.y(), z));
        if (p_cam.z() <= 0.0 || !spec.camera.in_range(p_cam.z())) {
          e.in_range = false;
        }
        if (p_cam.z() <= 0.0 ||
            !spec.camera.in_image(spec.camera.project(p_cam))) {
          e.fully_visible = false;
        }
      }
    }
    e.visible_pixels = rendered.gt.parts[i].visible_pixels;
    const double area = std::abs(polygon::signed_area(model.outline));
    e.pixel_density = area > 0.0 ? e.visible_pixels / area : 0.0;
    report.parts.push_back(e);
  }
  return report;
}

}  // namespace sheetloc
