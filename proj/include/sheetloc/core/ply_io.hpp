#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "sheetloc/core/point_cloud.hpp"

namespace sheetloc {

/// Reads an ASCII PLY with a single vertex element carrying x, y, z and
/// optionally nx, ny, nz and intensity. Anything else is rejected.
inline PointCloud read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  long line_no = 0;
  std::string line;
  auto next_line = [&](std::string& out) -> bool {
    while (std::getline(in, out)) {
      ++line_no;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      return true;
    }
    return false;
  };

  if (!next_line(line) || line != "ply") {
    throw ParseError("missing 'ply' magic", line_no);
  }
  if (!next_line(line) || line.rfind("format ascii", 0) != 0) {
    throw ParseError("only 'format ascii 1.0' is supported", line_no);
  }

  std::size_t vertex_count = 0;
  bool in_vertex_element = false;
  bool seen_vertex_element = false;
  std::vector<std::string> properties;

  while (true) {
    if (!next_line(line)) throw ParseError("unterminated header", line_no);
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "end_header") break;
    if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ss >> name >> count;
      if (name == "vertex") {
        if (seen_vertex_element) {
          throw ParseError("duplicate vertex element", line_no);
        }
        seen_vertex_element = true;
        in_vertex_element = true;
        vertex_count = count;
      } else {
        if (count > 0) {
          throw ParseError("unsupported element '" + name + "'", line_no);
        }
        in_vertex_element = false;
      }
      continue;
    }
    if (tok == "property") {
      if (!in_vertex_element) continue;
      std::string type, name;
      ss >> type >> name;
      if (type == "list") throw ParseError("list properties unsupported",
                                           line_no);
      properties.push_back(name);
      continue;
    }
    throw ParseError("unexpected header token '" + tok + "'", line_no);
  }

  if (!seen_vertex_element) {
    throw ParseError("no vertex element", line_no);
  }

  auto column = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < properties.size(); ++i) {
      if (properties[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int cx = column("x"), cy = column("y"), cz = column("z");
  if (cx < 0 || cy < 0 || cz < 0) {
    throw MissingCoordinateProperty("vertex element lacks x, y or z",
                                    line_no);
  }
  const int cnx = column("nx"), cny = column("ny"), cnz = column("nz");
  const bool has_normals = cnx >= 0 && cny >= 0 && cnz >= 0;
  const int ci = column("intensity");

  PointCloud out;
  out.points.reserve(vertex_count);
  if (has_normals) out.normals.reserve(vertex_count);
  if (ci >= 0) out.intensities.reserve(vertex_count);

  std::vector<double> row(properties.size());
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!next_line(line)) {
      throw ParseError("unexpected end of file in vertex data", line_no);
    }
    std::istringstream ss(line);
    for (std::size_t j = 0; j < properties.size(); ++j) {
      if (!(ss >> row[j])) {
        throw ParseError("malformed vertex row", line_no);
      }
    }
    out.points.emplace_back(row[cx], row[cy], row[cz]);
    if (has_normals) out.normals.emplace_back(row[cnx], row[cny], row[cnz]);
    if (ci >= 0) out.intensities.push_back(row[ci]);
  }
  out.validate();
  return out;
}

inline void write_ply(const PointCloud& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.precision(17);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << c.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (c.has_normals()) {
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  }
  if (c.has_intensities()) out << "property double intensity\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3& p = c.points[i];
    out << p.x() << " " << p.y() << " " << p.z();
    if (c.has_normals()) {
      const Vec3& n = c.normals[i];
      out << " " << n.x() << " " << n.y() << " " << n.z();
    }
    if (c.has_intensities()) out << " " << c.intensities[i];
    out << "\n";
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace sheetloc
