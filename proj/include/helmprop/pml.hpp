#pragma once

#include <complex>
#include <vector>

#include "grid.hpp"

namespace helmprop {

struct PmlProfile {
  int w_pml = 8;        // absorbing width, cells
  int t_nonabs = 0;     // unstretched overlap margin, cells
  double sigma0 = 4.0;  // damping strength (dimensionless)
  double k_ref = 0.0;   // reference wavenumber, 1/m

  int margin() const { return w_pml + t_nonabs; }
};

// Quadratic ramp in normalized depth d; clamped outside [0,1].
inline double pml_sigma(double d, const PmlProfile& p) {
  if (d <= 0.0) return 0.0;
  if (d >= 1.0) return p.sigma0;
  return p.sigma0 * d * d;
}

inline cd alpha_of_sigma(double sigma, const PmlProfile& p) {
  return cd(1.0, sigma / p.k_ref);
}

// Stretching along one axis of a block extent [lo..hi]: the outer w_pml
// cells on each end absorb, everything else (interior + t_nonabs margin)
// is 1. Depth 1 is reached at the extent boundary node.
inline std::vector<cd> block_alpha(int lo, int hi, const PmlProfile& p) {
  std::vector<cd> a(size_t(hi - lo + 1));
  for (int c = lo; c <= hi; ++c) {
    double d = 0.0;
    if (c < lo + p.w_pml) d = double(lo + p.w_pml - c) / p.w_pml;
    if (c > hi - p.w_pml) d = double(c - (hi - p.w_pml)) / p.w_pml;
    a[size_t(c - lo)] = alpha_of_sigma(pml_sigma(d, p), p);
  }
  return a;
}

// One-sided strip stretching from a trace line toward `far`: flat for the
// first t_nonabs cells, then a quadratic ramp over w_pml cells reaching
// full strength at the far end. Used by transfer channels.
inline std::vector<cd> strip_alpha(int line, int far, const PmlProfile& p) {
  int lo = std::min(line, far), hi = std::max(line, far);
  std::vector<cd> a(size_t(hi - lo + 1));
  for (int c = lo; c <= hi; ++c) {
    double depth = double(std::abs(c - line)) - p.t_nonabs;
    double d = depth / p.w_pml;
    a[size_t(c - lo)] = alpha_of_sigma(pml_sigma(d, p), p);
  }
  return a;
}

}  // namespace helmprop
