#include <catch2/catch_amalgamated.hpp>

#include "helmprop/green.hpp"

using namespace helmprop;

namespace {

struct Ref {
  double x;
  cd h;
};

// H0^(1) reference values, 30-digit arbitrary-precision evaluation.
const Ref kH0[] = {
    {0.05, {0.99937509764946858, -1.9793110008172096}},
    {0.5, {0.9384698072408129, -0.44451873350670656}},
    {1.0, {0.76519768655796655, 0.088256964215676958}},
    {3.0, {-0.26005195490193344, 0.37685001001279038}},
    {7.5, {0.2663396578803784, 0.11731328614820863}},
    {11.9, {0.025049441699589645, -0.22983321394337506}},
    {12.1, {0.069666773606807312, -0.21843838055092549}},
    {14.9, {0.0063915448908529068, 0.20654643470696921}},
    {15.1, {-0.034561851455564956, 0.20234322922865162}},
    {20.0, {0.16702466434058315, 0.062640596809383831}},
    {80.0, {-0.069742165512210023, -0.05562033908977}},
    {400.0, {-0.038825181530783956, -0.0091735198607593586}},
};

}  // namespace

TEST_CASE("hankel0 matches high-precision references") {
  for (const auto& r : kH0) {
    cd h = hankel0(r.x);
    INFO("x = " << r.x);
    CHECK(std::abs(h - r.h) <= 1e-13 * std::abs(r.h));
  }
}

TEST_CASE("hankel0 evaluation branches agree at the handover point") {
  auto s = detail::hankel0_series(detail::kHankelCrossover);
  auto a = detail::hankel0_asymptotic(detail::kHankelCrossover);
  double lo = std::abs(cd(double(s.real() - a.real()), double(s.imag() - a.imag())));
  CHECK(lo < 1e-12);
}

TEST_CASE("analytic green is (i/4) H0(kr)") {
  double k = 0.0628, r = 137.0;
  cd g = analytic_green(k, r);
  cd want = cd(0, 0.25) * hankel0(k * r);
  CHECK(std::abs(g - want) <= 1e-15);
}

TEST_CASE("analytic green rejects nonpositive arguments") {
  CHECK_THROWS_AS(analytic_green(1.0, 0.0), dimension_error);
  CHECK_THROWS_AS(analytic_green(0.0, 1.0), dimension_error);
  CHECK_THROWS_AS(analytic_green(1.0, -2.0), dimension_error);
}
