#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "sheetloc/core/binary_io.hpp"
#include "sheetloc/core/point_cloud.hpp"

namespace sheetloc {

/// Four-component point pair feature of two oriented points:
/// (|d|, angle(n1, d), angle(n2, d), angle(n1, n2)). Distances in mm,
/// angles in radians within [0, pi].
struct PpfFeature {
  double dist = 0.0;
  double n1_d = 0.0;
  double n2_d = 0.0;
  double n1_n2 = 0.0;
};

inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

inline PpfFeature compute_ppf(const Vec3& p1, const Vec3& n1, const Vec3& p2,
                              const Vec3& n2) {
  PpfFeature f;
  const Vec3 d = p2 - p1;
  f.dist = d.norm();
  if (f.dist < 1e-12) return f;
  const Vec3 dn = d / f.dist;
  f.n1_d = angle_between(n1, dn);
  f.n2_d = angle_between(n2, dn);
  f.n1_n2 = angle_between(n1, n2);
  return f;
}

/// Rotation taking `normal` onto +x, translated so `point` lands at the
/// origin. The half-plane angle of a second point around the x axis after
/// this alignment is the PPF voting angle alpha.
inline Mat3 align_normal_to_x(const Vec3& normal) {
  return Eigen::Quaterniond::FromTwoVectors(normal, Vec3::UnitX())
      .toRotationMatrix();
}

inline double ppf_alpha(const Vec3& ref_point, const Vec3& ref_normal,
                        const Vec3& other_point) {
  const Vec3 d = align_normal_to_x(ref_normal) * (other_point - ref_point);
  return std::atan2(d.z(), d.y());
}

/// Hash table from the quantised feature to the model pairs producing it.
/// The key packs the four bucket indices exactly (16 bits each), so lookup
/// is collision-free and voting is exactly reproducible.
struct PpfModel {
  struct Entry {
    std::uint32_t ref_index;
    float alpha;
  };

  double dist_step = 1.0;
  double angle_step_deg = 12.0;
  double diameter = 0.0;
  PointCloud cloud;  // the sampled model cloud the table was built from
  std::unordered_map<std::uint64_t, std::vector<Entry>> table;

  static std::uint64_t pack_key(std::uint64_t b0, std::uint64_t b1,
                                std::uint64_t b2, std::uint64_t b3) {
    return (b0 << 48) | (b1 << 32) | (b2 << 16) | b3;
  }

  std::uint64_t quantise(const PpfFeature& f) const {
    const double angle_step = deg_to_rad(angle_step_deg);
    const auto clamp16 = [](double v) {
      return static_cast<std::uint64_t>(
          std::min(65535.0, std::max(0.0, std::floor(v))));
    };
    return pack_key(clamp16(f.dist / dist_step), clamp16(f.n1_d / angle_step),
                    clamp16(f.n2_d / angle_step),
                    clamp16(f.n1_n2 / angle_step));
  }

  const std::vector<Entry>* lookup(const PpfFeature& f) const {
    const auto it = table.find(quantise(f));
    return it == table.end() ? nullptr : &it->second;
  }

  std::size_t entry_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : table) n += v.size();
    return n;
  }
};

/// Builds the PPF hash table over all ordered point pairs of the cloud.
inline PpfModel build_ppf_model(const PointCloud& cloud, double dist_step,
                                double angle_step_deg) {
  if (!cloud.has_normals()) {
    throw MissingChannel("build_ppf_model: cloud has no normals");
  }
  if (dist_step <= 0.0 || angle_step_deg <= 0.0) {
    throw InvalidArgument("build_ppf_model: steps must be positive");
  }
  PpfModel model;
  model.dist_step = dist_step;
  model.angle_step_deg = angle_step_deg;
  model.cloud = cloud;

  const std::size_t n = cloud.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      model.diameter =
          std::max(model.diameter, (cloud.points[i] - cloud.points[j]).norm());
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p1 = cloud.points[i];
    const Vec3& n1 = cloud.normals[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const PpfFeature f = compute_ppf(p1, n1, cloud.points[j],
                                       cloud.normals[j]);
      if (f.dist < 1e-12) continue;
      const float alpha =
          static_cast<float>(ppf_alpha(p1, n1, cloud.points[j]));
      model.table[model.quantise(f)].push_back(
          {static_cast<std::uint32_t>(i), alpha});
    }
  }
  return model;
}

// --- model cache file --------------------------------------------------------

namespace detail {

constexpr char kPpfMagic[8] = {'S', 'L', 'P', 'P', 'F', '0', '0', '1'};

}  // namespace detail

inline void save_ppf_model(const PpfModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(detail::kPpfMagic, sizeof(detail::kPpfMagic));
  detail::write_pod(out, model.dist_step);
  detail::write_pod(out, model.angle_step_deg);
  detail::write_pod(out, model.diameter);
  const std::uint64_t n = model.cloud.size();
  detail::write_pod(out, n);
  for (std::size_t i = 0; i < n; ++i) {
    detail::write_vec3(out, model.cloud.points[i]);
    detail::write_vec3(out, model.cloud.normals[i]);
  }
  const std::uint64_t buckets = model.table.size();
  detail::write_pod(out, buckets);
  for (const auto& [key, entries] : model.table) {
    detail::write_pod(out, key);
    const std::uint64_t count = entries.size();
    detail::write_pod(out, count);
    for (const auto& e : entries) detail::write_pod(out, e);
  }
  if (!out) throw Error("write failed: " + path);
}

inline PpfModel load_ppf_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kPpfMagic, sizeof(magic)) != 0) {
    throw ParseError("not a PPF model cache (bad magic/version)");
  }
  PpfModel model;
  detail::read_pod(in, model.dist_step);
  detail::read_pod(in, model.angle_step_deg);
  detail::read_pod(in, model.diameter);
  std::uint64_t n = 0;
  detail::read_pod(in, n);
  model.cloud.points.resize(n);
  model.cloud.normals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    detail::read_vec3(in, model.cloud.points[i]);
    detail::read_vec3(in, model.cloud.normals[i]);
  }
  std::uint64_t buckets = 0;
  detail::read_pod(in, buckets);
  for (std::uint64_t b = 0; b < buckets; ++b) {
    std::uint64_t key = 0, count = 0;
    detail::read_pod(in, key);
    detail::read_pod(in, count);
    auto& entries = model.table[key];
    entries.resize(count);
    for (auto& e : entries) detail::read_pod(in, e);
  }
  if (!in) throw ParseError("truncated PPF model cache");
  return model;
}

}  // namespace sheetloc
