#pragma once

#include <vector>

#include "band_lu.hpp"
#include "grid.hpp"
#include "pml.hpp"

namespace helmprop {

// Symmetrized UPML Helmholtz operator on one node rectangle:
//   div_h(A grad_h u) + J k^2 u,  A = diag(ay/ax, ax/ay),  J = ax*ay,
// with flux coefficients averaged at cell-edge midpoints and homogeneous
// Dirichlet on the extent boundary. Unknowns are the strictly interior
// nodes, ordered with the shorter grid direction innermost so the band
// stays minimal. Stretching is separable: ax depends on the x node only,
// ay on the y node only.
struct RectOperator {
  NodeRect ext;
  double hx = 1.0, hy = 1.0;
  double omega = 0.0;
  std::vector<cd> ax, ay;    // per x-node / y-node of ext
  std::vector<double> kk;    // wavenumber per node, x-fastest over ext
  int nxu = 0, nyu = 0;      // unknown counts per direction
  bool x_inner = true;

  RectOperator() = default;
  RectOperator(NodeRect ext_, double hx_, double hy_, std::vector<cd> ax_,
               std::vector<cd> ay_, std::vector<double> kk_, double omega_)
      : ext(ext_), hx(hx_), hy(hy_), omega(omega_), ax(std::move(ax_)),
        ay(std::move(ay_)), kk(std::move(kk_)) {
    nxu = ext.cells_x() - 1;
    nyu = ext.cells_y() - 1;
    if (nxu < 1 || nyu < 1) throw dimension_error("operator extent too small");
    if (int(ax.size()) != ext.nodes_x() || int(ay.size()) != ext.nodes_y() ||
        int(kk.size()) != ext.nodes_x() * ext.nodes_y())
      throw dimension_error("operator coefficient arrays mismatch extent");
    x_inner = nxu <= nyu;
  }

  int n_unknowns() const { return nxu * nyu; }
  int bandwidth() const { return x_inner ? nxu : nyu; }

  // Unknown index of global node (i,j); node must be strictly inside.
  int index(int i, int j) const {
    int ii = i - ext.x0 - 1, jj = j - ext.y0 - 1;
    return x_inner ? jj * nxu + ii : ii * nyu + jj;
  }

  cd axv(int i) const { return ax[size_t(i - ext.x0)]; }
  cd ayv(int j) const { return ay[size_t(j - ext.y0)]; }
  double kv(int i, int j) const {
    return kk[size_t(j - ext.y0) * ext.nodes_x() + size_t(i - ext.x0)];
  }

  // Edge coefficient between (i,j) and (i+1,j): mean of the nodal ay/ax.
  cd edge_x(int i, int j) const {
    return 0.5 * (ayv(j) / axv(i) + ayv(j) / axv(i + 1));
  }
  // Edge coefficient between (i,j) and (i,j+1): mean of the nodal ax/ay.
  cd edge_y(int i, int j) const {
    return 0.5 * (axv(i) / ayv(j) + axv(i) / ayv(j + 1));
  }
  // Source scaling of the symmetrized form: rhs = J f.
  cd source_scale(int i, int j) const { return axv(i) * ayv(j); }

  BandMatrix assemble_band() const {
    const int b = bandwidth();
    BandMatrix m(n_unknowns(), b, b);
    const double ihx2 = 1.0 / (hx * hx), ihy2 = 1.0 / (hy * hy);
    for (int j = ext.y0 + 1; j < ext.y1; ++j) {
      for (int i = ext.x0 + 1; i < ext.x1; ++i) {
        const int row = index(i, j);
        const cd cE = edge_x(i, j) * ihx2, cW = edge_x(i - 1, j) * ihx2;
        const cd cN = edge_y(i, j) * ihy2, cS = edge_y(i, j - 1) * ihy2;
        const double k = kv(i, j);
        m.at(row, row) = -(cE + cW + cN + cS) + source_scale(i, j) * (k * k);
        if (i + 1 < ext.x1) m.at(row, index(i + 1, j)) = cE;
        if (i - 1 > ext.x0) m.at(row, index(i - 1, j)) = cW;
        if (j + 1 < ext.y1) m.at(row, index(i, j + 1)) = cN;
        if (j - 1 > ext.y0) m.at(row, index(i, j - 1)) = cS;
      }
    }
    return m;
  }

  // out = A u over the unknown vector (Dirichlet-eliminated stencils).
  void apply(const cd* u, cd* out) const {
    const double ihx2 = 1.0 / (hx * hx), ihy2 = 1.0 / (hy * hy);
    for (int j = ext.y0 + 1; j < ext.y1; ++j) {
      for (int i = ext.x0 + 1; i < ext.x1; ++i) {
        const cd uc = u[index(i, j)];
        const cd uE = (i + 1 < ext.x1) ? u[index(i + 1, j)] : cd(0, 0);
        const cd uW = (i - 1 > ext.x0) ? u[index(i - 1, j)] : cd(0, 0);
        const cd uN = (j + 1 < ext.y1) ? u[index(i, j + 1)] : cd(0, 0);
        const cd uS = (j - 1 > ext.y0) ? u[index(i, j - 1)] : cd(0, 0);
        const double k = kv(i, j);
        out[index(i, j)] = (edge_x(i, j) * (uE - uc) + edge_x(i - 1, j) * (uW - uc)) * ihx2 +
                           (edge_y(i, j) * (uN - uc) + edge_y(i, j - 1) * (uS - uc)) * ihy2 +
                           source_scale(i, j) * (k * k) * uc;
      }
    }
  }

  std::vector<cd> apply(const std::vector<cd>& u) const {
    if (int(u.size()) != n_unknowns()) throw dimension_error("apply: field size mismatch");
    std::vector<cd> out(u.size());
    apply(u.data(), out.data());
    return out;
  }
};

// Unknown vector embedded into the extent with its Dirichlet zero ring.
inline FieldPatch embed_field(const RectOperator& op, const std::vector<cd>& u) {
  if (int(u.size()) != op.n_unknowns()) throw dimension_error("embed: field size mismatch");
  FieldPatch p(op.ext);
  for (int j = op.ext.y0 + 1; j < op.ext.y1; ++j)
    for (int i = op.ext.x0 + 1; i < op.ext.x1; ++i) p.at(i, j) = u[op.index(i, j)];
  return p;
}

// Wavenumber samples over an extent of the solver grid. The solver grid
// pads the model interior by `moff` cells of PML on every side, so model
// indices are solver indices shifted by -moff (clamped at the edges).
inline std::vector<double> sample_k_field(const VelocityModel& model, NodeRect ext,
                                          double omega, int moff) {
  std::vector<double> kk(size_t(ext.nodes_x()) * ext.nodes_y());
  for (int j = ext.y0; j <= ext.y1; ++j)
    for (int i = ext.x0; i <= ext.x1; ++i)
      kk[size_t(j - ext.y0) * ext.nodes_x() + size_t(i - ext.x0)] =
          sample_k(model, i - moff, j - moff, omega);
  return kk;
}

// Standard block operator: own PML on all four extent sides.
inline RectOperator make_block_operator(NodeRect ext, const VelocityModel& model,
                                        double omega, const PmlProfile& prof, int moff) {
  return RectOperator(ext, model.grid.hx, model.grid.hy,
                      block_alpha(ext.x0, ext.x1, prof),
                      block_alpha(ext.y0, ext.y1, prof),
                      sample_k_field(model, ext, omega, moff), omega);
}

}  // namespace helmprop
