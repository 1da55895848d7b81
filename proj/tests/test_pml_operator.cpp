#include <catch2/catch_amalgamated.hpp>

#include "helmprop/band_lu.hpp"
#include "helmprop/model_gen.hpp"
#include "helmprop/operator.hpp"
#include "helmprop/pml.hpp"
#include "helmprop/solver.hpp"

using namespace helmprop;

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

TEST_CASE("damping ramp is quadratic and clamped") {
  PmlProfile p{8, 0, 4.0, 0.1};
  CHECK(pml_sigma(-0.3, p) == 0.0);
  CHECK(pml_sigma(0.0, p) == 0.0);
  CHECK(pml_sigma(0.5, p) == 1.0);
  CHECK(pml_sigma(1.0, p) == 4.0);
  CHECK(pml_sigma(2.0, p) == 4.0);
  CHECK(alpha_of_sigma(2.0, p) == cd(1.0, 20.0));
}

TEST_CASE("block stretching absorbs only in the outer cells") {
  PmlProfile p{4, 2, 4.0, 0.1};
  auto a = block_alpha(10, 30, p);
  REQUIRE(a.size() == 21);
  CHECK(a[0] == alpha_of_sigma(4.0, p));          // extent end: full depth
  CHECK(a[2] == alpha_of_sigma(4.0 * 0.25, p));   // halfway down the ramp
  CHECK(a[4] == cd(1.0, 0.0));                    // ramp ends after w_pml
  for (int c = 4; c <= 16; ++c) CHECK(a[size_t(c)] == cd(1.0, 0.0));
  CHECK(a[20] == alpha_of_sigma(4.0, p));
  CHECK(a[18] == a[2]);  // symmetric
}

TEST_CASE("strip stretching is flat for t cells then ramps") {
  PmlProfile p{4, 2, 4.0, 0.1};
  auto a = strip_alpha(50, 56, p);  // upward strip, 6 = t + w
  REQUIRE(a.size() == 7);
  CHECK(a[0] == cd(1.0, 0.0));
  CHECK(a[1] == cd(1.0, 0.0));
  CHECK(a[2] == cd(1.0, 0.0));  // depth starts after the flat margin
  CHECK(a[4] == alpha_of_sigma(4.0 * 0.25, p));
  CHECK(a[6] == alpha_of_sigma(4.0, p));

  auto b = strip_alpha(56, 50, p);  // downward strip mirrors it
  for (size_t q = 0; q < a.size(); ++q) CHECK(b[q] == a[a.size() - 1 - q]);
}

TEST_CASE("assembled block matrix is complex symmetric") {
  const double h = 10.0, omega = kTwoPi / (10.0 * h) * 1500.0;
  VelocityModel m = gen_three_layer(16, 16, 2000.0, 1500.0, h, h);
  PmlProfile prof{4, 1, 4.0, omega / m.c_max()};
  RectOperator op = make_block_operator(NodeRect{0, 26, 0, 26}, m, omega, prof, 5);
  BandMatrix a = op.assemble_band();
  for (int i = 0; i < a.n; ++i)
    for (int j = std::max(0, i - a.ku); j <= std::min(a.n - 1, i + a.ku); ++j)
      if (a.in_band(i, j) && a.in_band(j, i)) {
        INFO("entry " << i << "," << j);
        CHECK(a.at(i, j) == a.at(j, i));
      }
}

TEST_CASE("matrix-free apply matches the assembled band") {
  const double h = 10.0, omega = kTwoPi / (10.0 * h) * 1500.0;
  VelocityModel m = gen_lens(12, 12, 1500.0, 0.3, h, h);
  PmlProfile prof{3, 1, 4.0, omega / m.c_max()};
  RectOperator op = make_block_operator(NodeRect{0, 20, 0, 20}, m, omega, prof, 4);
  BandMatrix a = op.assemble_band();

  std::vector<cd> x(size_t(op.n_unknowns()));
  for (size_t q = 0; q < x.size(); ++q) x[q] = cd(std::sin(0.1 * q), std::cos(0.37 * q));
  std::vector<cd> want(x.size(), cd(0, 0));
  for (int j = 0; j < a.n; ++j)
    for (int i = std::max(0, j - a.kl); i <= std::min(a.n - 1, j + a.ku); ++i)
      if (a.in_band(i, j)) want[size_t(i)] += a.at(i, j) * x[size_t(j)];

  std::vector<cd> got = op.apply(x);
  double err = 0, ref = 0;
  for (size_t q = 0; q < x.size(); ++q) {
    err += std::norm(got[q] - want[q]);
    ref += std::norm(want[q]);
  }
  CHECK(std::sqrt(err / ref) < 1e-14);
}

TEST_CASE("interior stencil has unit coefficients and Jacobian") {
  const double h = 10.0, omega = kTwoPi / (10.0 * h) * 1500.0;
  VelocityModel m = gen_constant(16, 16, 1500.0, h, h);
  PmlProfile prof{4, 0, 4.0, omega / m.c_max()};
  RectOperator op = make_block_operator(NodeRect{0, 24, 0, 24}, m, omega, prof, 4);
  // away from the absorbing frame both stretch factors are exactly 1
  for (int i = 6; i <= 18; ++i) {
    CHECK(op.edge_x(i, 12) == cd(1.0, 0.0));
    CHECK(op.edge_y(12, i) == cd(1.0, 0.0));
    CHECK(op.source_scale(i, 12) == cd(1.0, 0.0));
  }
}

TEST_CASE("direct solve leaves a tiny algebraic residual") {
  const double h = 10.0, omega = kTwoPi / (10.0 * h) * 1500.0;
  VelocityModel m = gen_three_layer(32, 32, 2000.0, 1500.0, h, h);
  PmlProfile prof{8, 0, 4.0, omega / m.c_max()};
  std::vector<TransferRow> f{{24, 24, cd(1.0 / (h * h), 0)}};
  FieldPatch u = direct_solve(m, omega, prof, f);

  RectOperator op = make_block_operator(NodeRect{0, 48, 0, 48}, m, omega, prof, 8);
  std::vector<cd> x(size_t(op.n_unknowns()));
  for (int j = 1; j < 48; ++j)
    for (int i = 1; i < 48; ++i) x[op.index(i, j)] = u.at(i, j);
  std::vector<cd> b(x.size(), cd(0, 0));
  b[op.index(24, 24)] = cd(1.0 / (h * h), 0);
  std::vector<cd> r = op.apply(x);
  double rn = 0, bn = 0;
  for (size_t q = 0; q < r.size(); ++q) {
    rn += std::norm(r[q] - b[q]);
    bn += std::norm(b[q]);
  }
  CHECK(std::sqrt(rn / bn) < 1e-12);
}

TEST_CASE("absorbing frame kills the field at the extent boundary") {
  const double h = 10.0, omega = kTwoPi / (10.0 * h) * 1500.0;
  VelocityModel m = gen_constant(64, 64, 1500.0, h, h);
  PmlProfile prof{8, 0, 4.0, omega / m.c_max()};
  FieldPatch u = direct_solve(m, omega, prof, {{40, 40, cd(1.0 / (h * h), 0)}});

  double interior = std::abs(u.at(40, 48));
  // one wavelength into the absorber the field should be well down and
  // the last interior layer essentially dead
  CHECK(std::abs(u.at(40, 76)) < 0.2 * interior);
  CHECK(std::abs(u.at(40, 79)) < 0.05 * interior);
}
