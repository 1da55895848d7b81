#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helmprop/io.hpp"
#include "helmprop/model_gen.hpp"

using namespace helmprop;

namespace {

std::string tmp_path(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  return p.string();
}

}  // namespace

TEST_CASE("velocity model round-trips through VELM") {
  VelocityModel m = gen_lens(12, 7, 1480.0, 0.25, 12.5, 8.0);
  m.grid.ox = -3.0;
  m.grid.oy = 40.0;
  std::string path = tmp_path("roundtrip.velm");
  write_velm(path, m);
  VelocityModel r = read_velm(path);

  REQUIRE(r.grid.nx == m.grid.nx);
  REQUIRE(r.grid.ny == m.grid.ny);
  CHECK(r.grid.hx == m.grid.hx);
  CHECK(r.grid.hy == m.grid.hy);
  CHECK(r.grid.ox == m.grid.ox);
  CHECK(r.grid.oy == m.grid.oy);
  for (size_t q = 0; q < m.c.size(); ++q)
    CHECK(r.c[q] == double(float(m.c[q])));  // speeds are stored as f32
  std::remove(path.c_str());
}

TEST_CASE("field round-trips through FLD2 exactly") {
  Field2 f;
  f.nx = 5;
  f.ny = 4;
  f.hx = 2.5;
  f.hy = 1.25;
  f.u.resize(20);
  for (int q = 0; q < 20; ++q) f.u[size_t(q)] = cd(q * 0.1 + 1e-17, -q * 3.7);
  std::string path = tmp_path("roundtrip.fld2");
  write_fld2(path, f);
  Field2 r = read_fld2(path);

  REQUIRE(r.nx == 5);
  REQUIRE(r.ny == 4);
  CHECK(r.hx == f.hx);
  CHECK(r.hy == f.hy);
  for (int q = 0; q < 20; ++q) CHECK(r.u[size_t(q)] == f.u[size_t(q)]);
  std::remove(path.c_str());
}

TEST_CASE("trace map record round-trips through TMAP") {
  std::vector<cd> entries(12);
  for (int q = 0; q < 12; ++q) entries[size_t(q)] = cd(std::sin(q * 0.3), q - 5.5);
  std::string path = tmp_path("roundtrip.tmap");
  write_tmap(path, 2, 1, 3, 3, 4, entries);
  TmapRecord r = read_tmap(path);

  CHECK(r.level == 2);
  CHECK(r.bi == 1);
  CHECK(r.bj == 3);
  CHECK(r.rows == 3);
  CHECK(r.cols == 4);
  REQUIRE(r.entries.size() == entries.size());
  for (size_t q = 0; q < entries.size(); ++q) CHECK(r.entries[q] == entries[q]);
  std::remove(path.c_str());
}

TEST_CASE("wrong magic is rejected") {
  std::string path = tmp_path("badmagic.velm");
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE junk follows";
  }
  CHECK_THROWS_AS(read_velm(path), io_error);
  CHECK_THROWS_AS(read_fld2(path), io_error);
  CHECK_THROWS_AS(read_tmap(path), io_error);
  std::remove(path.c_str());
}

TEST_CASE("truncated file is rejected") {
  VelocityModel m = gen_constant(4, 4);
  std::string path = tmp_path("trunc.velm");
  write_velm(path, m);
  auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 7);
  CHECK_THROWS_AS(read_velm(path), io_error);
  std::remove(path.c_str());
}

TEST_CASE("nonpositive speeds are rejected on load") {
  VelocityModel m = gen_constant(3, 3);
  m.c[5] = -10.0;
  std::string path = tmp_path("neg.velm");
  write_velm(path, m);
  CHECK_THROWS_AS(read_velm(path), io_error);
  std::remove(path.c_str());
}

TEST_CASE("missing file maps to io_error") {
  CHECK_THROWS_AS(read_velm(tmp_path("does-not-exist.velm")), io_error);
}
