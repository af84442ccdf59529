#pragma once

#include <cstring>
#include <fstream>

#include "sheetloc/core/transform.hpp"

namespace sheetloc::detail {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

inline void write_vec3(std::ofstream& out, const Vec3& v) {
  out.write(reinterpret_cast<const char*>(v.data()), 3 * sizeof(double));
}

inline void read_vec3(std::ifstream& in, Vec3& v) {
  in.read(reinterpret_cast<char*>(v.data()), 3 * sizeof(double));
}

}  // namespace sheetloc::detail
