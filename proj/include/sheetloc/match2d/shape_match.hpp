#pragma once

#include <algorithm>

#include "sheetloc/core/depth_image.hpp"
#include "sheetloc/match2d/template_pyramid.hpp"

namespace sheetloc {

/// Planar template match: template-origin pixel position at the finest
/// level, rotation, and the gradient-direction similarity score in [0, 1].
struct PlanarMatch {
  std::string model_id;
  double u = 0.0;
  double v = 0.0;
  double theta_deg = 0.0;
  int level = 0;
  double score = 0.0;
};

struct ShapeMatchParams {
  double min_score = 0.5;
  std::size_t max_matches = 4;
  /// Gradient magnitudes below this fraction of the level's 95th-percentile
  /// magnitude count as "no edge" and contribute nothing.
  double gradient_floor = 0.1;
  /// Candidates kept per coarse level before refinement.
  std::size_t coarse_candidates = 24;
};

namespace detail {

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<float> gx, gy;     // zero where invalid or below the floor
  std::vector<std::uint8_t> ok;  // usable gradient

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
};

struct ImagePyramidLevel {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;
  GradientField grad;
};

inline ImagePyramidLevel downsample2(const ImagePyramidLevel& src) {
  ImagePyramidLevel dst;
  dst.width = std::max(1, src.width / 2);
  dst.height = std::max(1, src.height / 2);
  dst.values.assign(static_cast<std::size_t>(dst.width) * dst.height, 0.0);
  dst.valid.assign(dst.values.size(), 0);
  for (int y = 0; y < dst.height; ++y) {
    for (int x = 0; x < dst.width; ++x) {
      double sum = 0.0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int sx = 2 * x + dx, sy = 2 * y + dy;
          if (sx >= src.width || sy >= src.height) continue;
          const std::size_t si = static_cast<std::size_t>(sy) * src.width + sx;
          if (!src.valid[si]) continue;
          sum += src.values[si];
          ++n;
        }
      }
      if (n > 0) {
        dst.values[static_cast<std::size_t>(y) * dst.width + x] = sum / n;
        dst.valid[static_cast<std::size_t>(y) * dst.width + x] = 1;
      }
    }
  }
  return dst;
}

inline void compute_gradients(ImagePyramidLevel& lv, double floor_factor) {
  GradientField& g = lv.grad;
  g.width = lv.width;
  g.height = lv.height;
  g.gx.assign(static_cast<std::size_t>(lv.width) * lv.height, 0.0f);
  g.gy.assign(g.gx.size(), 0.0f);
  g.ok.assign(g.gx.size(), 0);
  std::vector<float> mags;
  mags.reserve(g.gx.size());
  auto at = [&](int x, int y) {
    return lv.values[static_cast<std::size_t>(y) * lv.width + x];
  };
  auto ok = [&](int x, int y) {
    return lv.valid[static_cast<std::size_t>(y) * lv.width + x] != 0;
  };
  // Central differences where possible, one-sided at validity borders so a
  // few missing pixels do not wipe out the gradient field.
  for (int y = 1; y + 1 < lv.height; ++y) {
    for (int x = 1; x + 1 < lv.width; ++x) {
      if (!ok(x, y)) continue;
      float dx, dy;
      if (ok(x - 1, y) && ok(x + 1, y)) {
        dx = static_cast<float>((at(x + 1, y) - at(x - 1, y)) / 2.0);
      } else if (ok(x + 1, y)) {
        dx = static_cast<float>(at(x + 1, y) - at(x, y));
      } else if (ok(x - 1, y)) {
        dx = static_cast<float>(at(x, y) - at(x - 1, y));
      } else {
        continue;
      }
      if (ok(x, y - 1) && ok(x, y + 1)) {
        dy = static_cast<float>((at(x, y + 1) - at(x, y - 1)) / 2.0);
      } else if (ok(x, y + 1)) {
        dy = static_cast<float>(at(x, y + 1) - at(x, y));
      } else if (ok(x, y - 1)) {
        dy = static_cast<float>(at(x, y) - at(x, y - 1));
      } else {
        continue;
      }
      const std::size_t i = g.index(x, y);
      g.gx[i] = dx;
      g.gy[i] = dy;
      g.ok[i] = 1;
      const float m = std::sqrt(dx * dx + dy * dy);
      if (m > 0.0f) mags.push_back(m);
    }
  }
  if (mags.empty()) return;
  std::nth_element(mags.begin(), mags.begin() + mags.size() * 95 / 100,
                   mags.end());
  const float p95 = mags[mags.size() * 95 / 100];
  const float floor = static_cast<float>(floor_factor) * p95;
  for (std::size_t i = 0; i < g.gx.size(); ++i) {
    if (!g.ok[i]) continue;
    const float m = std::sqrt(g.gx[i] * g.gx[i] + g.gy[i] * g.gy[i]);
    if (m < floor) {
      g.ok[i] = 0;
      continue;
    }
    g.gx[i] /= m;
    g.gy[i] /= m;
  }
}

/// Mean |cos| between template directions and image gradient directions at
/// the template's points. Missing or floor-level gradients contribute 0,
/// which makes the score occlusion- and truncation-tolerant.
inline double score_at(const GradientField& g, const ContourTemplate& tpl,
                       double u, double v) {
  if (tpl.offsets_px.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < tpl.offsets_px.size(); ++i) {
    const int x = static_cast<int>(std::lround(u + tpl.offsets_px[i].x()));
    const int y = static_cast<int>(std::lround(v + tpl.offsets_px[i].y()));
    if (x < 0 || x >= g.width || y < 0 || y >= g.height) continue;
    const std::size_t gi = g.index(x, y);
    if (!g.ok[gi]) continue;
    sum += std::abs(g.gx[gi] * tpl.directions[i].x() +
                    g.gy[gi] * tpl.directions[i].y());
  }
  return sum / static_cast<double>(tpl.offsets_px.size());
}

struct Candidate {
  double u, v, theta_deg, score;
};

}  // namespace detail

/// Coarse-to-fine template search over (u, v, theta): exhaustive scan at the
/// top pyramid level, local refinement down to level 0, non-maximum
/// suppression, and a final min_score cut. Results sorted by descending
/// score.
inline std::vector<PlanarMatch> shape_match(const DepthImage& img,
                                            const TemplatePyramid& tpl,
                                            double min_score,
                                            std::size_t max_matches,
                                            const ShapeMatchParams& extra = {}) {
  if (img.width <= 0 || img.height <= 0 || tpl.levels.empty()) return {};

  // Image pyramid with per-level gradient fields.
  std::vector<detail::ImagePyramidLevel> pyr(tpl.levels.size());
  pyr[0].width = img.width;
  pyr[0].height = img.height;
  pyr[0].values = img.values;
  pyr[0].valid = img.valid;
  for (std::size_t i = 0; i < pyr[0].values.size(); ++i) {
    if (!pyr[0].valid[i]) pyr[0].values[i] = 0.0;
  }
  for (std::size_t l = 1; l < pyr.size(); ++l) {
    pyr[l] = detail::downsample2(pyr[l - 1]);
  }
  for (auto& lv : pyr) detail::compute_gradients(lv, extra.gradient_floor);

  const int top = static_cast<int>(tpl.levels.size()) - 1;
  const double coarse_cut = std::max(0.2, 0.75 * min_score);

  // Exhaustive top-level scan.
  std::vector<detail::Candidate> cands;
  {
    const auto& lv = pyr[top];
    for (const ContourTemplate& rot : tpl.levels[top].rotations) {
      for (int y = 0; y < lv.height; ++y) {
        for (int x = 0; x < lv.width; ++x) {
          const double s = detail::score_at(lv.grad, rot, x, y);
          if (s >= coarse_cut) {
            cands.push_back({static_cast<double>(x), static_cast<double>(y),
                             rot.theta_deg, s});
          }
        }
      }
    }
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const auto& a, const auto& b) {
                     return a.score > b.score;
                   });
  // Coarse NMS so refinement effort spreads over distinct locations.
  {
    const double sep = std::max(2.0, tpl.outline_radius_px /
                                         std::pow(2.0, top) * 0.5);
    std::vector<detail::Candidate> kept;
    for (const auto& c : cands) {
      bool clash = false;
      for (const auto& k : kept) {
        if (std::hypot(c.u - k.u, c.v - k.v) < sep) {
          clash = true;
          break;
        }
      }
      if (!clash) kept.push_back(c);
      if (kept.size() >= extra.coarse_candidates) break;
    }
    cands.swap(kept);
  }

  // Refine down the pyramid: scale up, search a +-2 px / +-1 coarse-theta
  // neighborhood at each finer level.
  for (int level = top - 1; level >= 0; --level) {
    const auto& lv = pyr[level];
    const auto& tlv = tpl.levels[level];
    std::vector<detail::Candidate> next;
    for (const auto& c : cands) {
      detail::Candidate best{2.0 * c.u, 2.0 * c.v, c.theta_deg, -1.0};
      for (double dth = -2.0 * tlv.theta_step_deg;
           dth <= 2.0 * tlv.theta_step_deg + 1e-9; dth += tlv.theta_step_deg) {
        const ContourTemplate& rot =
            tpl.nearest_rotation(level, c.theta_deg + dth);
        for (int dy = -2; dy <= 2; ++dy) {
          for (int dx = -2; dx <= 2; ++dx) {
            const double u = 2.0 * c.u + dx, v = 2.0 * c.v + dy;
            const double s = detail::score_at(lv.grad, rot, u, v);
            if (s > best.score) best = {u, v, rot.theta_deg, s};
          }
        }
      }
      next.push_back(best);
    }
    cands.swap(next);
  }

  std::stable_sort(cands.begin(), cands.end(),
                   [](const auto& a, const auto& b) {
                     return a.score > b.score;
                   });
  std::vector<PlanarMatch> out;
  const double sep = std::max(3.0, tpl.outline_radius_px * 0.5);
  for (const auto& c : cands) {
    if (c.score < min_score) continue;
    bool clash = false;
    for (const auto& m : out) {
      if (std::hypot(c.u - m.u, c.v - m.v) < sep) {
        clash = true;
        break;
      }
    }
    if (clash) continue;
    PlanarMatch m;
    m.model_id = tpl.model_id;
    m.u = c.u;
    m.v = c.v;
    m.theta_deg = c.theta_deg;
    m.level = 0;
    m.score = c.score;
    out.push_back(m);
    if (out.size() >= max_matches) break;
  }
  return out;
}

/// Runs shape_match for several part templates on one image and returns all
/// matches sorted by score; the best entry's model_id is the recognised
/// identity.
inline std::vector<PlanarMatch> recognize(
    const DepthImage& img, const std::vector<TemplatePyramid>& templates,
    double min_score, std::size_t max_matches_per_model = 2,
    const ShapeMatchParams& extra = {}) {
  std::vector<PlanarMatch> all;
  for (const TemplatePyramid& tpl : templates) {
    const auto matches =
        shape_match(img, tpl, min_score, max_matches_per_model, extra);
    all.insert(all.end(), matches.begin(), matches.end());
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const PlanarMatch& a, const PlanarMatch& b) {
                     return a.score > b.score;
                   });
  return all;
}

}  // namespace sheetloc
