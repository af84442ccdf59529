#pragma once

#include <map>
#include <random>

#include "sheetloc/core/depth_image.hpp"
#include "sheetloc/core/point_cloud.hpp"
#include "sheetloc/match3d/workpiece.hpp"
#include "sheetloc/synth/scene_spec.hpp"

namespace sheetloc {

enum class PointLabel : std::uint8_t { fixture, part, ghost };

struct GroundTruth {
  struct PartInfo {
    std::string model_id;
    RigidTransform pose;      // model frame in scene frame
    double visibility = 0.0;  // visible pixels / unoccluded pixels
    std::size_t visible_pixels = 0;
  };
  std::vector<PartInfo> parts;
  RigidTransform camera_pose;
  std::vector<PointLabel> labels;     // aligned with the output cloud
  std::vector<int> label_part_index;  // part index or -1
};

struct RenderResult {
  DepthImage depth;      // perspective, camera-frame z in mm
  DepthImage intensity;  // same grid, material reflectance in [0,1]
  PointCloud cloud;      // camera frame, with normals and intensities
  GroundTruth gt;
};

namespace detail {

struct Hit {
  double t = std::numeric_limits<double>::infinity();  // camera-frame depth
  Vec3 normal = Vec3::UnitZ();  // scene frame, unnormalised orientation
  double intensity = 0.0;
  PointLabel label = PointLabel::fixture;
  int part_index = -1;
  Vec3 point = Vec3::Zero();  // scene frame
  bool valid() const { return std::isfinite(t); }
};

/// Ray vs axis-aligned box centered at the local origin. Ray given in the
/// box's local frame; returns entry parameter and local normal.
inline bool ray_box(const Vec3& o, const Vec3& d, const Vec3& half_size,
                    double& t_hit, Vec3& n_local) {
  double t0 = 1e-9, t1 = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (std::abs(o[a]) > half_size[a]) return false;
      continue;
    }
    double near = (-half_size[a] - o[a]) / d[a];
    double far = (half_size[a] - o[a]) / d[a];
    double s = -1.0;
    if (near > far) {
      std::swap(near, far);
      s = 1.0;
    }
    if (near > t0) {
      t0 = near;
      axis = a;
      sign = s;
    }
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  if (axis < 0) return false;  // origin inside the box
  t_hit = t0;
  n_local = Vec3::Zero();
  n_local[axis] = sign;
  return true;
}

inline bool ray_cylinder(const Vec3& o, const Vec3& d, double radius,
                         double half_len, double& t_hit, Vec3& n_local) {
  bool found = false;
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_n = Vec3::UnitZ();
  // Side wall.
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - radius * radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
        if (t <= 1e-9 || t >= best) continue;
        const Vec3 p = o + t * d;
        if (std::abs(p.z()) > half_len) continue;
        best = t;
        best_n = Vec3(p.x(), p.y(), 0.0).normalized();
        found = true;
      }
    }
  }
  // Caps.
  if (std::abs(d.z()) > 1e-15) {
    for (double zc : {-half_len, half_len}) {
      const double t = (zc - o.z()) / d.z();
      if (t <= 1e-9 || t >= best) continue;
      const Vec3 p = o + t * d;
      if (p.x() * p.x() + p.y() * p.y() > radius * radius) continue;
      best = t;
      best_n = Vec3(0.0, 0.0, zc > 0 ? 1.0 : -1.0);
      found = true;
    }
  }
  if (found) {
    t_hit = best;
    n_local = best_n;
  }
  return found;
}

/// Ray vs extruded polygon (z in [-half, +half]) in the part's local frame.
inline bool ray_extrusion(const Vec3& o, const Vec3& d,
                          const std::vector<Vec2>& ccw, double half,
                          double& t_hit, Vec3& n_local) {
  bool found = false;
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_n = Vec3::UnitZ();
  // Top and bottom faces.
  if (std::abs(d.z()) > 1e-15) {
    for (double zc : {half, -half}) {
      const double t = (zc - o.z()) / d.z();
      if (t <= 1e-9 || t >= best) continue;
      const Vec3 p = o + t * d;
      if (!polygon::point_inside(ccw, Vec2(p.x(), p.y()))) continue;
      best = t;
      best_n = Vec3(0.0, 0.0, zc > 0 ? 1.0 : -1.0);
      found = true;
    }
  }
  // Side walls.
  for (std::size_t i = 0; i < ccw.size(); ++i) {
    const Vec2& a2 = ccw[i];
    const Vec2& b2 = ccw[(i + 1) % ccw.size()];
    const Vec2 e = b2 - a2;
    const double len = e.norm();
    if (len < 1e-12) continue;
    const Vec2 n2(e.y() / len, -e.x() / len);  // outward for CCW
    const double denom = d.x() * n2.x() + d.y() * n2.y();
    if (std::abs(denom) < 1e-15) continue;
    const double t =
        (n2.x() * (a2.x() - o.x()) + n2.y() * (a2.y() - o.y())) / denom;
    if (t <= 1e-9 || t >= best) continue;
    const Vec3 p = o + t * d;
    if (std::abs(p.z()) > half) continue;
    const double along = (Vec2(p.x(), p.y()) - a2).dot(e / len);
    if (along < 0.0 || along > len) continue;
    best = t;
    best_n = Vec3(n2.x(), n2.y(), 0.0);
    found = true;
  }
  if (found) {
    t_hit = best;
    n_local = best_n;
  }
  return found;
}

struct PreparedPart {
  std::vector<Vec2> ccw;
  double half = 0.0;
  RigidTransform pose_inv;
  RigidTransform pose;
  double intensity = 0.25;
  int index = 0;
};

struct ScenePrimitives {
  std::vector<Fixture> fixtures;
  std::vector<RigidTransform> fixture_inv;
  std::vector<PreparedPart> parts;
};

/// Scene-frame ray cast against every primitive. `o` is the camera origin,
/// `d` the scene-frame direction of a ray whose camera-frame z component is
/// 1, so the hit parameter equals the camera-frame depth.
inline Hit cast_ray(const ScenePrimitives& prims, const Vec3& o, const Vec3& d,
                    bool parts_only_index = false, int only_part = -1) {
  Hit hit;
  if (!parts_only_index) {
    for (std::size_t i = 0; i < prims.fixtures.size(); ++i) {
      const Fixture& f = prims.fixtures[i];
      const RigidTransform& inv = prims.fixture_inv[i];
      const Vec3 ol = inv * o;
      const Vec3 dl = inv.rotate(d);
      double t;
      Vec3 nl;
      bool ok = false;
      if (f.type == FixtureType::cylinder) {
        ok = ray_cylinder(ol, dl, f.radius, f.length / 2.0, t, nl);
      } else {
        ok = ray_box(ol, dl, f.size / 2.0, t, nl);
      }
      if (ok && t < hit.t) {
        hit.t = t;
        hit.normal = f.pose.rotate(nl);
        hit.label = PointLabel::fixture;
        hit.part_index = -1;
        hit.point = o + t * d;
        hit.intensity = f.intensity;
        if (f.type == FixtureType::plate && nl.z() > 0.5) {
          const Vec3 local = ol + t * dl;
          for (const Vec2& b : f.beacons) {
            if ((Vec2(local.x(), local.y()) - b).norm() <= f.beacon_radius) {
              hit.intensity = f.beacon_intensity;
              break;
            }
          }
        }
      }
    }
  }
  for (const PreparedPart& part : prims.parts) {
    if (only_part >= 0 && part.index != only_part) continue;
    const Vec3 ol = part.pose_inv * o;
    const Vec3 dl = part.pose_inv.rotate(d);
    double t;
    Vec3 nl;
    if (ray_extrusion(ol, dl, part.ccw, part.half, t, nl) && t < hit.t) {
      hit.t = t;
      hit.normal = part.pose.rotate(nl);
      hit.label = PointLabel::part;
      hit.part_index = part.index;
      hit.point = o + t * d;
      hit.intensity = part.intensity;
    }
  }
  return hit;
}

}  // namespace detail

/// Renders a scene spec into a depth image, an intensity image, a labelled
/// point cloud (camera frame) and the ground truth. Deterministic:
/// identical (spec, seed) produce bit-identical outputs. Rays are cast
/// through pixel centers; hits outside the camera's scanning range are
/// dropped.
inline RenderResult render(const SceneSpec& spec,
                           const std::map<std::string, WorkpieceModel>&
                               registry) {
  spec.validate();
  if (spec.fixtures.empty() && spec.parts.empty()) {
    throw EmptyScene("render: scene has no fixtures and no parts");
  }

  detail::ScenePrimitives prims;
  prims.fixtures = spec.fixtures;
  for (const Fixture& f : spec.fixtures) {
    prims.fixture_inv.push_back(f.pose.inverse());
  }
  for (std::size_t i = 0; i < spec.parts.size(); ++i) {
    const auto it = registry.find(spec.parts[i].model_id);
    if (it == registry.end()) {
      throw InvalidArgument("render: unknown model '" + spec.parts[i].model_id +
                            "'");
    }
    detail::PreparedPart p;
    p.ccw = it->second.ccw_outline();
    p.half = it->second.thickness / 2.0;
    p.pose = spec.parts[i].pose;
    p.pose_inv = p.pose.inverse();
    p.intensity = spec.parts[i].intensity;
    p.index = static_cast<int>(i);
    prims.parts.push_back(std::move(p));
  }

  const CameraModel& cam = spec.camera;
  const RigidTransform& cam_pose = spec.camera_pose;
  const Vec3 origin = cam_pose.translation();

  RenderResult out;
  out.depth = DepthImage::make(cam.width, cam.height, ImageKind::depth);
  out.depth.camera = cam;
  out.depth.cam_pose = cam_pose;
  out.intensity = DepthImage::make(cam.width, cam.height, ImageKind::intensity);
  out.intensity.camera = cam;
  out.intensity.cam_pose = cam_pose;
  out.gt.camera_pose = cam_pose;

  std::vector<detail::Hit> hits(static_cast<std::size_t>(cam.width) *
                                cam.height);
  std::vector<std::size_t> part_pixels(spec.parts.size(), 0);

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 d = cam_pose.rotate(cam.pixel_ray(x + 0.5, y + 0.5));
      detail::Hit hit = detail::cast_ray(prims, origin, d);
      if (!hit.valid() || !cam.in_range(hit.t)) continue;
      hits[out.depth.index(x, y)] = hit;
      if (hit.label == PointLabel::part) ++part_pixels[hit.part_index];
    }
  }

  // Visibility: visible pixels over the pixels the part would cover alone
  // on an unbounded image plane (occluders and borders ignored).
  for (std::size_t i = 0; i < spec.parts.size(); ++i) {
    GroundTruth::PartInfo info;
    info.model_id = spec.parts[i].model_id;
    info.pose = spec.parts[i].pose;
    info.visible_pixels = part_pixels[i];

    const detail::PreparedPart& part = prims.parts[i];
    double u_min = std::numeric_limits<double>::infinity();
    double u_max = -u_min, v_min = u_min, v_max = -u_min;
    bool any_in_front = false;
    for (const Vec2& c2 : part.ccw) {
      for (double z : {-part.half, part.half}) {
        const Vec3 p_cam = cam_pose.inverse() * (part.pose * Vec3(c2.x(),
                                                                  c2.y(), z));
        if (p_cam.z() <= 1.0) continue;
        any_in_front = true;
        const Vec2 uv = cam.project(p_cam);
        u_min = std::min(u_min, uv.x());
        u_max = std::max(u_max, uv.x());
        v_min = std::min(v_min, uv.y());
        v_max = std::max(v_max, uv.y());
      }
    }
    std::size_t alone = 0, visible_unbounded = 0;
    if (any_in_front) {
      const int x0 = static_cast<int>(std::floor(u_min)) - 2;
      const int x1 = static_cast<int>(std::ceil(u_max)) + 2;
      const int y0 = static_cast<int>(std::floor(v_min)) - 2;
      const int y1 = static_cast<int>(std::ceil(v_max)) + 2;
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const Vec3 d = cam_pose.rotate(cam.pixel_ray(x + 0.5, y + 0.5));
          const detail::Hit h =
              detail::cast_ray(prims, origin, d, true, part.index);
          if (h.valid()) {
            ++alone;
            if (x >= 0 && x < cam.width && y >= 0 && y < cam.height) {
              const detail::Hit& full = hits[out.depth.index(x, y)];
              if (full.valid() && full.label == PointLabel::part &&
                  full.part_index == part.index) {
                ++visible_unbounded;
              }
            }
          }
        }
      }
    }
    info.visibility =
        alone == 0 ? 0.0
                   : static_cast<double>(info.visible_pixels) /
                         static_cast<double>(alone);
    (void)visible_unbounded;
    out.gt.parts.push_back(std::move(info));
  }

  // Noise pass: sequential row-major RNG draws keep the result reproducible.
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const NoiseSpec& noise = spec.noise;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      detail::Hit& hit = hits[out.depth.index(x, y)];
      if (!hit.valid()) continue;
      const Vec3 d = cam_pose.rotate(cam.pixel_ray(x + 0.5, y + 0.5));
      const Vec3 dn = d.normalized();

      if (noise.dropout_rate > 0.0 &&
          std::abs(dn.dot(hit.normal)) < 0.3) {
        if (uni(rng) < noise.dropout_rate) {
          hit.t = std::numeric_limits<double>::infinity();
          continue;
        }
      }
      if (noise.ghost_rate > 0.0 && uni(rng) < noise.ghost_rate) {
        const double h = noise.ghost_band_lo +
                         uni(rng) * (noise.ghost_band_hi - noise.ghost_band_lo);
        if (std::abs(d.z()) > 1e-9) {
          hit.t += h / d.z();
          hit.label = PointLabel::ghost;
          hit.part_index = -1;
          hit.point = origin + hit.t * d;
        }
      }
      if (noise.depth_sigma > 0.0) {
        hit.t += gauss(rng) * noise.depth_sigma;
        hit.point = origin + hit.t * d;
      }
    }
  }

  // Emit images and the camera-frame cloud.
  const RigidTransform scene_to_cam = cam_pose.inverse();
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const detail::Hit& hit = hits[out.depth.index(x, y)];
      if (!hit.valid() || hit.t <= 0.0) continue;
      out.depth.set(x, y, hit.t);
      out.intensity.set(x, y, hit.intensity);
      const Vec3 p_cam = hit.t * cam.pixel_ray(x + 0.5, y + 0.5);
      Vec3 n_cam = scene_to_cam.rotate(hit.normal);
      if (n_cam.norm() < 1e-9) n_cam = -Vec3::UnitZ();
      n_cam.normalize();
      if (n_cam.dot(-p_cam) < 0.0) n_cam = -n_cam;  // face the camera
      out.cloud.points.push_back(p_cam);
      out.cloud.normals.push_back(n_cam);
      out.cloud.intensities.push_back(hit.intensity);
      out.gt.labels.push_back(hit.label);
      out.gt.label_part_index.push_back(hit.part_index);
    }
  }
  out.cloud.frame_id = "camera";
  return out;
}

}  // namespace sheetloc
