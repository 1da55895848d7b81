#pragma once

#include <cmath>
#include <string>

#include "errors.hpp"
#include "grid.hpp"

namespace helmprop {

// Built-in velocity models on an nx-by-ny cell grid with unit spacing by
// default. Speeds are nodal samples, x-fastest.

inline VelocityModel gen_constant(int nx, int ny, double c0 = 1500.0,
                                  double hx = 1.0, double hy = 1.0) {
  VelocityModel m;
  m.grid = GridSpec{nx, ny, hx, hy, 0.0, 0.0};
  m.c.assign(size_t(nx + 1) * (ny + 1), c0);
  return m;
}

// Three horizontal layers splitting the y extent into thirds:
// c_top / c_mid / c_bot from the top of the domain down. Node rows on a
// layer boundary take the lower layer's speed.
inline VelocityModel gen_three_layer(int nx, int ny, double c_out = 2000.0,
                                     double c_mid = 1500.0, double hx = 1.0,
                                     double hy = 1.0) {
  VelocityModel m;
  m.grid = GridSpec{nx, ny, hx, hy, 0.0, 0.0};
  m.c.resize(size_t(nx + 1) * (ny + 1));
  const int j1 = ny / 3, j2 = 2 * ny / 3;
  for (int j = 0; j <= ny; ++j) {
    double c = (j <= j1 || j > j2) ? c_out : c_mid;
    for (int i = 0; i <= nx; ++i) m.c[size_t(j) * (nx + 1) + i] = c;
  }
  return m;
}

// Gaussian low-velocity lens centered in the domain:
// c(x) = c0 * (1 - depth * exp(-|x - x_c|^2 / R^2)), R = quarter of the
// smaller domain extent.
inline VelocityModel gen_lens(int nx, int ny, double c0 = 1500.0,
                              double depth = 0.3, double hx = 1.0,
                              double hy = 1.0) {
  VelocityModel m;
  m.grid = GridSpec{nx, ny, hx, hy, 0.0, 0.0};
  m.c.resize(size_t(nx + 1) * (ny + 1));
  const double cx = 0.5 * nx * hx, cy = 0.5 * ny * hy;
  const double R = 0.25 * std::min(nx * hx, ny * hy);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      double dx = i * hx - cx, dy = j * hy - cy;
      double r2 = (dx * dx + dy * dy) / (R * R);
      m.c[size_t(j) * (nx + 1) + i] = c0 * (1.0 - depth * std::exp(-r2));
    }
  return m;
}

inline VelocityModel gen_model(const std::string& name, int nx, int ny,
                               double hx = 1.0, double hy = 1.0) {
  if (name == "constant") return gen_constant(nx, ny, 1500.0, hx, hy);
  if (name == "three-layer") return gen_three_layer(nx, ny, 2000.0, 1500.0, hx, hy);
  if (name == "lens") return gen_lens(nx, ny, 1500.0, 0.3, hx, hy);
  throw config_error("unknown model name: " + name);
}

}  // namespace helmprop
