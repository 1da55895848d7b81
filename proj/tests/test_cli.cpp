#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helmprop/io.hpp"

using namespace helmprop;
namespace fs = std::filesystem;

namespace {

const char* cli() { return HELMPROP_CLI_PATH; }

int run(const std::string& args) {
  std::string cmd = std::string(cli()) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path work_dir() {
  auto p = fs::temp_directory_path() / "helmprop-cli-test";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("gen-model writes a loadable velocity file") {
  auto dir = work_dir();
  auto path = (dir / "lens.velm").string();
  REQUIRE(run("gen-model --name lens --nx 32 --ny 32 --spacing 10 --out " + path) == 0);
  VelocityModel m = read_velm(path);
  CHECK(m.grid.nx == 32);
  CHECK(m.grid.hx == 10.0);
  CHECK(m.c[0] > 1000.0);
}

TEST_CASE("solve writes a field and a report and respects the residual gate") {
  auto dir = work_dir();
  auto model = (dir / "m.velm").string();
  REQUIRE(run("gen-model --name three-layer --nx 64 --ny 64 --spacing 10 --out " + model) == 0);

  auto cfgp = (dir / "run.cfg").string();
  {
    std::ofstream c(cfgp);
    c << "model = " << model << "\n"
      << "frequency = 15\n"  // 10 points per wavelength at c = 1500, h = 10
      << "n_levels = 2\n"
      << "block_cells = 16\n"
      << "source_node = 32 32\n"
      << "out_field = " << (dir / "u.fld2").string() << "\n"
      << "out_report = " << (dir / "report.txt").string() << "\n";
  }
  REQUIRE(run("solve --config " + cfgp) == 0);

  Field2 u = read_fld2((dir / "u.fld2").string());
  CHECK(u.nx == 65);
  CHECK(u.ny == 65);
  double peak = 0;
  for (const auto& v : u.u) peak = std::max(peak, std::abs(v));
  CHECK(peak > 0.0);

  std::ifstream rep((dir / "report.txt").string());
  std::stringstream ss;
  ss << rep.rdbuf();
  std::string text = ss.str();
  CHECK(text.find("residual = ") != std::string::npos);
  CHECK(text.find("sweeps_level_1 = ") != std::string::npos);
  CHECK(text.find("setup_seconds_level_0 = ") != std::string::npos);
}

TEST_CASE("export-slice emits CSV that reimports exactly") {
  auto dir = work_dir();
  Field2 f;
  f.nx = 9;
  f.ny = 6;
  f.hx = 2.0;
  f.hy = 3.0;
  f.u.resize(54);
  for (int q = 0; q < 54; ++q)
    f.u[size_t(q)] = cd(std::sin(q * 0.7) * 1e-3, std::cos(q * 1.3));
  auto fld = (dir / "s.fld2").string();
  write_fld2(fld, f);

  auto csv = (dir / "line.csv").string();
  REQUIRE(run("export-slice --field " + fld + " --axis x --index 4 --out " + csv) == 0);

  std::ifstream in(csv);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "coord,re,im,abs");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double coord, re, im, mag;
    REQUIRE((ls >> coord >> re >> im >> mag));
    cd want = f.at(rows, 4);
    CHECK(re == want.real());  // full round-trip, printed at f64 precision
    CHECK(im == want.imag());
    CHECK(coord == rows * f.hx);
    ++rows;
  }
  CHECK(rows == f.nx);

  // out-of-range index is a config error
  CHECK(run("export-slice --field " + fld + " --axis y --index 99 --out " + csv) == 65);
}

TEST_CASE("error classes map to distinct exit codes") {
  auto dir = work_dir();
  CHECK(run("frobnicate") == 64);                       // unknown command
  CHECK(run("solve") == 64);                            // missing required flag
  CHECK(run("solve --config /nonexistent.cfg") == 66);  // unreadable file

  auto cfgp = (dir / "bad.cfg").string();
  {
    std::ofstream c(cfgp);
    c << "model = whatever\nfrequency = 15\nn_levels = 1\nblock_cells = 8\n";
  }  // no source spec
  CHECK(run("solve --config " + cfgp) == 65);
}

TEST_CASE("validate twosub passes and reports") {
  CHECK(run("validate twosub") == 0);
}
