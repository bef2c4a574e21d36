#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wls/core/trajectory.hpp"
#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// Matrices are stored little-endian: magic "WLSM", u32 version, u64 rows,
// u64 cols, then column-major doubles. Raw byte images round-trip bit-exactly.
static_assert(std::endian::native == std::endian::little,
              "matrix files are little-endian; this build targets LE hosts");

inline void save_matrix(const std::string& path, const Mat& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  const char magic[4] = {'W', 'L', 'S', 'M'};
  const std::uint32_t version = 1;
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  f.write(magic, 4);
  f.write(reinterpret_cast<const char*>(&version), sizeof version);
  f.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  f.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  f.write(reinterpret_cast<const char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline Mat load_matrix(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t rows = 0, cols = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&version), sizeof version);
  f.read(reinterpret_cast<char*>(&rows), sizeof rows);
  f.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!f || magic[0] != 'W' || magic[1] != 'L' || magic[2] != 'S' || magic[3] != 'M')
    throw IoError("not a matrix file: " + path);
  if (version != 1) throw IoError("unsupported matrix file version in " + path);
  if (rows > (1ull << 32) || cols > (1ull << 32))
    throw IoError("implausible matrix shape in " + path);
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  f.read(reinterpret_cast<char*>(m.data()),
         static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!f) throw IoError("truncated matrix file: " + path);
  return m;
}

inline void save_vector(const std::string& path, const Vec& v) {
  Mat m(v.size(), 1);
  m.col(0) = v;
  save_matrix(path, m);
}

inline Vec load_vector(const std::string& path) {
  Mat m = load_matrix(path);
  if (m.cols() != 1) throw IoError("expected a single-column file: " + path);
  return m.col(0);
}

// Doubles in sidecar files use 17 significant digits, which round-trips
// exactly through strtod.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_key_values(const std::string& path,
                             const std::map<std::string, std::string>& kv) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  for (const auto& [k, v] : kv) f << k << "=" << v << "\n";
  if (!f) throw IoError("write failed: " + path);
}

inline std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=', first);
    if (eq == std::string::npos)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

// Trajectories persist as a states matrix (one column per node) next to a
// sidecar <path>.meta holding the grid and free-form annotations.
inline void save_trajectory(const std::string& path, const Trajectory& traj,
                            std::map<std::string, std::string> extra = {}) {
  traj.validate();
  save_matrix(path, traj.as_matrix());
  std::ostringstream grid;
  for (std::size_t i = 0; i < traj.grid.size(); ++i) {
    if (i) grid << " ";
    grid << format_double(traj.grid[i]);
  }
  extra["grid"] = grid.str();
  write_key_values(path + ".meta", extra);
}

inline Trajectory load_trajectory(const std::string& path,
                                  std::map<std::string, std::string>* meta_out = nullptr) {
  Mat states = load_matrix(path);
  auto kv = read_key_values(path + ".meta");
  auto it = kv.find("grid");
  if (it == kv.end()) throw IoError("trajectory sidecar missing grid: " + path + ".meta");
  Trajectory traj;
  std::istringstream gs(it->second);
  double t;
  while (gs >> t) traj.grid.push_back(t);
  if (static_cast<Eigen::Index>(traj.grid.size()) != states.cols())
    throw IoError("trajectory grid/states mismatch in " + path);
  traj.states.reserve(traj.grid.size());
  for (Eigen::Index j = 0; j < states.cols(); ++j) traj.states.push_back(states.col(j));
  if (meta_out) *meta_out = std::move(kv);
  return traj;
}

}  // namespace wls
