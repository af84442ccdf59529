#pragma once

#include <fstream>

#include "sheetloc/core/binary_io.hpp"
#include "sheetloc/match3d/workpiece.hpp"

namespace sheetloc {

/// Contour template: outline sample offsets (px, relative to the outline
/// centroid) with the gradient direction an image edge should exhibit
/// there (the outward contour normal).
struct ContourTemplate {
  double theta_deg = 0.0;
  std::vector<Vec2> offsets_px;
  std::vector<Vec2> directions;  // unit vectors
};

/// Rotation-indexed contour templates over an image pyramid. Level 0 is the
/// finest; every level halves the resolution (mm_per_px doubles) and
/// doubles the rotation step.
struct TemplatePyramid {
  struct Level {
    double mm_per_px = 1.0;
    double theta_step_deg = 1.0;
    std::vector<ContourTemplate> rotations;  // covers [0, 360)
  };

  std::string model_id;
  double base_mm_per_px = 1.0;
  double outline_radius_px = 0.0;  // farthest contour sample at level 0
  std::vector<Level> levels;

  const ContourTemplate& nearest_rotation(int level, double theta_deg) const {
    const Level& lv = levels[level];
    double t = std::fmod(theta_deg, 360.0);
    if (t < 0.0) t += 360.0;
    const int i = static_cast<int>(std::lround(t / lv.theta_step_deg)) %
                  static_cast<int>(lv.rotations.size());
    return lv.rotations[i];
  }
};

/// Rasterises the outline contour of a part into gradient-direction
/// templates over a theta grid and pyramid levels. theta_step_deg must
/// divide 360.
inline TemplatePyramid build_template(const WorkpieceModel& m,
                                      double theta_step_deg, double mm_per_px,
                                      int levels) {
  m.validate();
  if (mm_per_px <= 0.0) throw InvalidArgument("mm_per_px must be positive");
  if (levels < 1) throw InvalidArgument("need at least one pyramid level");
  if (theta_step_deg <= 0.0 ||
      std::abs(360.0 / theta_step_deg -
               std::lround(360.0 / theta_step_deg)) > 1e-9) {
    throw InvalidArgument("theta_step_deg must divide 360");
  }

  const std::vector<Vec2> poly = m.ccw_outline();
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& v : poly) centroid += v;
  centroid /= static_cast<double>(poly.size());

  TemplatePyramid tpl;
  tpl.model_id = m.id;
  tpl.base_mm_per_px = mm_per_px;

  for (int level = 0; level < levels; ++level) {
    TemplatePyramid::Level lv;
    lv.mm_per_px = mm_per_px * std::pow(2.0, level);
    lv.theta_step_deg = theta_step_deg * std::pow(2.0, level);
    const int n_rot = static_cast<int>(std::lround(360.0 / lv.theta_step_deg));

    // Contour samples in model mm, one per pixel of this level.
    std::vector<Vec2> samples, normals;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& a = poly[i];
      const Vec2& b = poly[(i + 1) % poly.size()];
      const double len = (b - a).norm();
      if (len < 1e-12) continue;
      const Vec2 dir = (b - a) / len;
      const Vec2 outward(dir.y(), -dir.x());
      const int n = std::max(1, static_cast<int>(std::ceil(len / lv.mm_per_px)));
      for (int s = 0; s < n; ++s) {
        samples.push_back(a + dir * ((s + 0.5) / n * len) - centroid);
        normals.push_back(outward);
      }
    }

    for (int r = 0; r < n_rot; ++r) {
      const double theta = r * lv.theta_step_deg;
      const double c = std::cos(deg_to_rad(theta));
      const double s = std::sin(deg_to_rad(theta));
      ContourTemplate rot;
      rot.theta_deg = theta;
      rot.offsets_px.reserve(samples.size());
      rot.directions.reserve(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const Vec2& p = samples[i];
        const Vec2& n = normals[i];
        rot.offsets_px.emplace_back((c * p.x() - s * p.y()) / lv.mm_per_px,
                                    (s * p.x() + c * p.y()) / lv.mm_per_px);
        rot.directions.emplace_back(c * n.x() - s * n.y(),
                                    s * n.x() + c * n.y());
        if (level == 0) {
          tpl.outline_radius_px = std::max(tpl.outline_radius_px,
                                           rot.offsets_px.back().norm());
        }
      }
      lv.rotations.push_back(std::move(rot));
    }
    tpl.levels.push_back(std::move(lv));
  }
  return tpl;
}

// --- template cache file -----------------------------------------------------

namespace detail {

constexpr char kTplMagic[8] = {'S', 'L', 'T', 'P', 'L', '0', '0', '1'};

}  // namespace detail

inline void save_template(const TemplatePyramid& tpl, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(detail::kTplMagic, sizeof(detail::kTplMagic));
  const std::uint64_t id_len = tpl.model_id.size();
  detail::write_pod(out, id_len);
  out.write(tpl.model_id.data(), static_cast<std::streamsize>(id_len));
  detail::write_pod(out, tpl.base_mm_per_px);
  detail::write_pod(out, tpl.outline_radius_px);
  const std::uint64_t n_levels = tpl.levels.size();
  detail::write_pod(out, n_levels);
  for (const auto& lv : tpl.levels) {
    detail::write_pod(out, lv.mm_per_px);
    detail::write_pod(out, lv.theta_step_deg);
    const std::uint64_t n_rot = lv.rotations.size();
    detail::write_pod(out, n_rot);
    for (const auto& rot : lv.rotations) {
      detail::write_pod(out, rot.theta_deg);
      const std::uint64_t n_pts = rot.offsets_px.size();
      detail::write_pod(out, n_pts);
      for (std::size_t i = 0; i < rot.offsets_px.size(); ++i) {
        detail::write_pod(out, rot.offsets_px[i].x());
        detail::write_pod(out, rot.offsets_px[i].y());
        detail::write_pod(out, rot.directions[i].x());
        detail::write_pod(out, rot.directions[i].y());
      }
    }
  }
  if (!out) throw Error("write failed: " + path);
}

inline TemplatePyramid load_template(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kTplMagic, sizeof(magic)) != 0) {
    throw ParseError("not a template cache (bad magic/version)");
  }
  TemplatePyramid tpl;
  std::uint64_t id_len = 0;
  detail::read_pod(in, id_len);
  tpl.model_id.resize(id_len);
  in.read(tpl.model_id.data(), static_cast<std::streamsize>(id_len));
  detail::read_pod(in, tpl.base_mm_per_px);
  detail::read_pod(in, tpl.outline_radius_px);
  std::uint64_t n_levels = 0;
  detail::read_pod(in, n_levels);
  for (std::uint64_t l = 0; l < n_levels; ++l) {
    TemplatePyramid::Level lv;
    detail::read_pod(in, lv.mm_per_px);
    detail::read_pod(in, lv.theta_step_deg);
    std::uint64_t n_rot = 0;
    detail::read_pod(in, n_rot);
    for (std::uint64_t r = 0; r < n_rot; ++r) {
      ContourTemplate rot;
      detail::read_pod(in, rot.theta_deg);
      std::uint64_t n_pts = 0;
      detail::read_pod(in, n_pts);
      rot.offsets_px.resize(n_pts);
      rot.directions.resize(n_pts);
      for (std::uint64_t i = 0; i < n_pts; ++i) {
        double ox, oy, dx, dy;
        detail::read_pod(in, ox);
        detail::read_pod(in, oy);
        detail::read_pod(in, dx);
        detail::read_pod(in, dy);
        rot.offsets_px[i] = Vec2(ox, oy);
        rot.directions[i] = Vec2(dx, dy);
      }
      lv.rotations.push_back(std::move(rot));
    }
    tpl.levels.push_back(std::move(lv));
  }
  if (!in) throw ParseError("truncated template cache");
  return tpl;
}

}  // namespace sheetloc
