#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace helmprop {

// General banded complex matrix in LAPACK gb storage: entry (i,j) lives at
// ab[j*ldab + kl + ku + i - j]; the top kl rows of each column are fill
// space for pivoting. Row/column indices are 0-based.
struct BandMatrix {
  int n = 0, kl = 0, ku = 0, ldab = 0;
  std::vector<cd> ab;

  BandMatrix() = default;
  BandMatrix(int n_, int kl_, int ku_)
      : n(n_), kl(kl_), ku(ku_), ldab(2 * kl_ + ku_ + 1),
        ab(size_t(ldab) * n_, cd(0.0, 0.0)) {}

  cd& at(int i, int j) { return ab[size_t(j) * ldab + size_t(kl + ku + i - j)]; }
  cd at(int i, int j) const { return ab[size_t(j) * ldab + size_t(kl + ku + i - j)]; }
  bool in_band(int i, int j) const { return i - j <= kl && j - i <= ku; }
};

// LU factors with partial pivoting confined to the band. Immutable after
// construction; solves may run concurrently.
struct BandFactor {
  int n = 0, kl = 0, ku = 0, ldab = 0;
  std::vector<cd> ab;
  std::vector<int> ipiv;

  void solve_inplace(cd* x) const {
    const int kd = kl + ku;
    for (int j = 0; j < n; ++j) {
      int p = ipiv[size_t(j)];
      if (p != j) std::swap(x[j], x[p]);
      const cd xj = x[j];
      if (xj == cd(0.0, 0.0)) continue;
      const cd* col = &ab[size_t(j) * ldab + kd];
      const int km = std::min(kl, n - 1 - j);
      for (int t = 1; t <= km; ++t) x[j + t] -= col[t] * xj;
    }
    for (int j = n - 1; j >= 0; --j) {
      const cd* col = &ab[size_t(j) * ldab + kd];
      const cd xj = x[j] / col[0];
      x[j] = xj;
      if (xj == cd(0.0, 0.0)) continue;
      const int top = std::max(0, j - kd);
      for (int i = top; i < j; ++i) x[i] -= col[i - j] * xj;
    }
  }

  void solve_inplace_multi(cd* x, int nrhs, size_t ld) const {
    for (int r = 0; r < nrhs; ++r) solve_inplace(x + size_t(r) * ld);
  }

  std::vector<cd> solve(std::vector<cd> rhs) const {
    if (int(rhs.size()) != n) throw dimension_error("band solve: rhs size mismatch");
    solve_inplace(rhs.data());
    return rhs;
  }
};

inline BandFactor factorize_band(BandMatrix a) {
  BandFactor f;
  f.n = a.n;
  f.kl = a.kl;
  f.ku = a.ku;
  f.ldab = a.ldab;
  f.ipiv.resize(size_t(a.n));
  std::vector<cd>& ab = a.ab;
  const int n = a.n, kl = a.kl, ku = a.ku, ldab = a.ldab;
  const int kd = kl + ku;
  int ju = 0;
  for (int j = 0; j < n; ++j) {
    cd* colj = &ab[size_t(j) * ldab + kd];
    const int km = std::min(kl, n - 1 - j);
    int jp = 0;
    double best = std::abs(colj[0]);
    for (int t = 1; t <= km; ++t) {
      double v = std::abs(colj[t]);
      if (v > best) { best = v; jp = t; }
    }
    if (best < 1e-300)
      throw solver_error("band factorize: singular pivot at column " + std::to_string(j));
    f.ipiv[size_t(j)] = j + jp;
    ju = std::max(ju, std::min(j + ku + jp, n - 1));
    if (jp != 0) {
      for (int k = j; k <= ju; ++k) {
        cd* colk = &ab[size_t(k) * ldab + kd - k];
        std::swap(colk[j + jp], colk[j]);
      }
    }
    if (km > 0) {
      const cd inv = cd(1.0, 0.0) / colj[0];
      for (int t = 1; t <= km; ++t) colj[t] *= inv;
      for (int k = j + 1; k <= ju; ++k) {
        cd* colk = &ab[size_t(k) * ldab + kd + j - k];
        const cd t = colk[0];
        if (t != cd(0.0, 0.0)) {
          for (int i = 1; i <= km; ++i) colk[i] -= t * colj[i];
        }
      }
    }
  }
  f.ab = std::move(a.ab);
  return f;
}

}  // namespace helmprop
