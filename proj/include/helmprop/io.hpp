#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace helmprop {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw io_error(std::string("truncated read: ") + what);
  return v;
}

inline void check_magic(std::istream& is, const char* magic, const char* path) {
  char got[4];
  is.read(got, 4);
  if (!is || std::memcmp(got, magic, 4) != 0)
    throw io_error(std::string(path) + ": bad magic, expected " + magic);
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open " + path);
  return f;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot create " + path);
  return f;
}

}  // namespace detail

// Velocity model: "VELM", u32 sample counts per axis (nodes = cells + 1),
// f64 hx, hy, origin, then f32 speeds x-fastest.
inline void write_velm(const std::string& path, const VelocityModel& m) {
  auto f = detail::open_out(path);
  f.write("VELM", 4);
  detail::put<uint32_t>(f, uint32_t(m.grid.nx + 1));
  detail::put<uint32_t>(f, uint32_t(m.grid.ny + 1));
  detail::put<double>(f, m.grid.hx);
  detail::put<double>(f, m.grid.hy);
  detail::put<double>(f, m.grid.ox);
  detail::put<double>(f, m.grid.oy);
  for (double v : m.c) detail::put<float>(f, float(v));
  if (!f) throw io_error("short write: " + path);
}

inline VelocityModel read_velm(const std::string& path) {
  auto f = detail::open_in(path);
  detail::check_magic(f, "VELM", path.c_str());
  VelocityModel m;
  uint32_t sx = detail::get<uint32_t>(f, "nx");
  uint32_t sy = detail::get<uint32_t>(f, "ny");
  if (sx < 2 || sy < 2) throw io_error(path + ": degenerate model grid");
  m.grid.nx = int(sx) - 1;
  m.grid.ny = int(sy) - 1;
  m.grid.hx = detail::get<double>(f, "hx");
  m.grid.hy = detail::get<double>(f, "hy");
  m.grid.ox = detail::get<double>(f, "origin_x");
  m.grid.oy = detail::get<double>(f, "origin_y");
  m.c.resize(size_t(sx) * sy);
  for (auto& v : m.c) {
    v = detail::get<float>(f, "speed");
    if (!(v > 0.0) || !std::isfinite(v)) throw io_error(path + ": nonpositive speed");
  }
  return m;
}

// Complex field: "FLD2", u32 node counts per axis, f64 hx, hy, then
// interleaved f64 (re, im) x-fastest.
struct Field2 {
  int nx = 0, ny = 0;  // node counts
  double hx = 1.0, hy = 1.0;
  std::vector<cd> u;

  cd& at(int i, int j) { return u[size_t(j) * nx + i]; }
  cd at(int i, int j) const { return u[size_t(j) * nx + i]; }
};

inline void write_fld2(const std::string& path, const Field2& fld) {
  auto f = detail::open_out(path);
  f.write("FLD2", 4);
  detail::put<uint32_t>(f, uint32_t(fld.nx));
  detail::put<uint32_t>(f, uint32_t(fld.ny));
  detail::put<double>(f, fld.hx);
  detail::put<double>(f, fld.hy);
  for (cd v : fld.u) {
    detail::put<double>(f, v.real());
    detail::put<double>(f, v.imag());
  }
  if (!f) throw io_error("short write: " + path);
}

inline Field2 read_fld2(const std::string& path) {
  auto f = detail::open_in(path);
  detail::check_magic(f, "FLD2", path.c_str());
  Field2 fld;
  fld.nx = int(detail::get<uint32_t>(f, "nx"));
  fld.ny = int(detail::get<uint32_t>(f, "ny"));
  fld.hx = detail::get<double>(f, "hx");
  fld.hy = detail::get<double>(f, "hy");
  fld.u.resize(size_t(fld.nx) * fld.ny);
  for (auto& v : fld.u) {
    double re = detail::get<double>(f, "re");
    double im = detail::get<double>(f, "im");
    v = cd(re, im);
  }
  return fld;
}

// Trace map cache: "TMAP", block id (level, i, j as u32), u64 rows, u64
// cols, complex f64 entries column-major.
inline void write_tmap(const std::string& path, int level, int bi, int bj,
                       uint64_t rows, uint64_t cols, const std::vector<cd>& entries) {
  if (entries.size() != rows * cols) throw dimension_error("tmap: entry count mismatch");
  auto f = detail::open_out(path);
  f.write("TMAP", 4);
  detail::put<uint32_t>(f, uint32_t(level));
  detail::put<uint32_t>(f, uint32_t(bi));
  detail::put<uint32_t>(f, uint32_t(bj));
  detail::put<uint64_t>(f, rows);
  detail::put<uint64_t>(f, cols);
  for (cd v : entries) {
    detail::put<double>(f, v.real());
    detail::put<double>(f, v.imag());
  }
  if (!f) throw io_error("short write: " + path);
}

struct TmapRecord {
  int level = 0, bi = 0, bj = 0;
  uint64_t rows = 0, cols = 0;
  std::vector<cd> entries;
};

inline TmapRecord read_tmap(const std::string& path) {
  auto f = detail::open_in(path);
  detail::check_magic(f, "TMAP", path.c_str());
  TmapRecord r;
  r.level = int(detail::get<uint32_t>(f, "level"));
  r.bi = int(detail::get<uint32_t>(f, "bi"));
  r.bj = int(detail::get<uint32_t>(f, "bj"));
  r.rows = detail::get<uint64_t>(f, "rows");
  r.cols = detail::get<uint64_t>(f, "cols");
  r.entries.resize(r.rows * r.cols);
  for (auto& v : r.entries) {
    double re = detail::get<double>(f, "re");
    double im = detail::get<double>(f, "im");
    v = cd(re, im);
  }
  return r;
}

}  // namespace helmprop
