#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "errors.hpp"

namespace helmprop {

using cd = std::complex<double>;

// Cell-counted grid; nodes run 0..nx, 0..ny. Node (i,j) sits at
// origin + (i*hx, j*hy).
struct GridSpec {
  int nx = 0, ny = 0;
  double hx = 1.0, hy = 1.0;
  double ox = 0.0, oy = 0.0;
};

// Closed node-index rectangle [x0..x1] x [y0..y1].
struct NodeRect {
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;

  int cells_x() const { return x1 - x0; }
  int cells_y() const { return y1 - y0; }
  int nodes_x() const { return x1 - x0 + 1; }
  int nodes_y() const { return y1 - y0 + 1; }

  bool contains(int i, int j) const {
    return x0 <= i && i <= x1 && y0 <= j && j <= y1;
  }
  // Excludes the boundary ring (the Dirichlet nodes of a block).
  bool strictly_inside(int i, int j) const {
    return x0 < i && i < x1 && y0 < j && j < y1;
  }
  bool operator==(const NodeRect&) const = default;
};

struct VelocityModel {
  GridSpec grid;               // interior cells
  std::vector<double> c;       // (nx+1)*(ny+1) node speeds, x-fastest

  double& at(int i, int j) { return c[size_t(j) * (grid.nx + 1) + i]; }
  double at(int i, int j) const { return c[size_t(j) * (grid.nx + 1) + i]; }

  double c_max() const {
    double m = 0;
    for (double v : c) m = std::max(m, v);
    return m;
  }
};

// Complex nodal field over a node rectangle, x-fastest. Reads outside the
// rectangle are zero, which doubles as the Dirichlet/zero-extension
// convention used throughout.
struct FieldPatch {
  NodeRect rect;
  std::vector<cd> v;

  FieldPatch() = default;
  explicit FieldPatch(NodeRect r)
      : rect(r), v(size_t(r.nodes_x()) * r.nodes_y(), cd(0, 0)) {}

  cd& at(int i, int j) {
    return v[size_t(j - rect.y0) * rect.nodes_x() + size_t(i - rect.x0)];
  }
  cd at(int i, int j) const {
    return v[size_t(j - rect.y0) * rect.nodes_x() + size_t(i - rect.x0)];
  }
  cd get(int i, int j) const { return rect.contains(i, j) ? at(i, j) : cd(0, 0); }

  // Union-sum accumulation of another patch.
  void add(const FieldPatch& o) {
    for (int j = o.rect.y0; j <= o.rect.y1; ++j)
      for (int i = o.rect.x0; i <= o.rect.x1; ++i) at(i, j) += o.at(i, j);
  }
};

// k = omega / c at the nearest model node; indices clamp to the model
// extent so PML padding outside the model reuses edge values.
inline double sample_k(const VelocityModel& model, int i, int j, double omega) {
  int ci = std::clamp(i, 0, model.grid.nx);
  int cj = std::clamp(j, 0, model.grid.ny);
  return omega / model.at(ci, cj);
}

}  // namespace helmprop
