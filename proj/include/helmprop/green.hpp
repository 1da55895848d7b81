#pragma once

#include <cmath>
#include <complex>

#include "errors.hpp"
#include "grid.hpp"

namespace helmprop {

namespace detail {

inline constexpr long double kEulerGamma = 0.5772156649015328606065120900824024L;
inline constexpr long double kPiL = 3.14159265358979323846264338327950288L;

// Ascending series for J0 and Y0. Cancellation grows with x; long double
// accumulation keeps the branch good through the crossover at x = 12.
inline std::complex<long double> hankel0_series(long double x) {
  long double q = x * x / 4.0L;  // (x/2)^2
  long double term = 1.0L;       // q^k / (k!)^2
  long double j0 = 1.0L;
  long double ysum = 0.0L;       // sum (-1)^{k+1} H_k q^k/(k!)^2
  long double hk = 0.0L;
  long double sign = 1.0L;
  for (int k = 1; k <= 64; ++k) {
    term *= q / (long double)(k) / (long double)(k);
    hk += 1.0L / k;
    sign = -sign;
    j0 += sign * term;
    ysum -= sign * hk * term;
    if (term * (hk + 1.0L) < 1e-22L * (std::fabs(j0) + 1.0L)) break;
  }
  long double y0 =
      (2.0L / detail::kPiL) * ((std::log(x / 2.0L) + kEulerGamma) * j0 + ysum);
  return {j0, y0};
}

// Hankel asymptotic expansion: H0 ~ sqrt(2/(pi x)) e^{i(x - pi/4)} sum (-i)^k c_k x^-k.
inline std::complex<long double> hankel0_asymptotic(long double x) {
  std::complex<long double> s = 0.0L;
  std::complex<long double> ipow = 1.0L;  // (-i)^k
  long double c = 1.0L;                   // c_k
  long double xk = 1.0L;                  // x^-k
  long double prev = 1e30L;
  for (int k = 0; k <= 60; ++k) {
    long double mag = c * xk;
    if (mag > prev) break;  // divergent tail reached
    s += ipow * (c * xk);
    if (mag < 1e-22L) break;
    prev = mag;
    ipow *= std::complex<long double>(0.0L, -1.0L);
    long double m = 2.0L * k + 1.0L;
    c *= m * m / (8.0L * (k + 1.0L));
    xk /= x;
  }
  long double amp = std::sqrt(2.0L / (detail::kPiL * x));
  long double ph = x - detail::kPiL / 4.0L;
  return amp * std::complex<long double>(std::cos(ph), std::sin(ph)) * s;
}

// The series loses ~5 digits to cancellation by x = 15 while the
// optimally truncated expansion is still settling; they cross near 1e-14
// relative error here.
inline constexpr long double kHankelCrossover = 15.0L;

}  // namespace detail

// First-kind Hankel function H0^(1)(x) = J0(x) + i Y0(x), x > 0.
inline cd hankel0(double x) {
  if (!(x > 0.0)) throw dimension_error("hankel0: argument must be positive");
  std::complex<long double> h = (x <= detail::kHankelCrossover)
                                    ? detail::hankel0_series(x)
                                    : detail::hankel0_asymptotic(x);
  return {double(h.real()), double(h.imag())};
}

// Free-space response amplitude (i/4) H0^(1)(k r). With the sign
// convention (lap + k^2) u = f used by the discrete operator, a unit
// point load produces the negative of this value.
inline cd analytic_green(double k, double r) {
  if (!(r > 0.0)) throw dimension_error("analytic_green: r must be positive");
  if (!(k > 0.0)) throw dimension_error("analytic_green: k must be positive");
  cd h = hankel0(k * r);
  return cd(0.0, 0.25) * h;
}

}  // namespace helmprop
