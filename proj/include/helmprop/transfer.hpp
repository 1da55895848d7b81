#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "band_lu.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "operator.hpp"
#include "pml.hpp"
#include "quadtree.hpp"

namespace helmprop {

// One rhs entry produced by a transfer channel, in global node coords.
struct TransferRow {
  int gx = 0, gy = 0;
  cd val;
};

// A transfer channel: a trace line, a sweep direction, and the
// prefactored one-sided absorbing strip next to the line. Turning a trace
// into a transfer source has two steps. extend_trace solves the strip
// operator with the trace as Dirichlet data on the line, zero on the far
// side and the tangential ends; the strip stretches away from the line
// (flat for t_nonabs cells, then the quadratic ramp), while tangentially
// it inherits the profile the channel was built with. transfer_source
// then applies the difference between the enclosing block's interior
// stencil (normal stretching 1, tangential profile as given) and the
// strip stencil to the zero-extension of that field. Where the two
// stencils agree the subtraction cancels bit-exactly, so the result is
// supported only on the strip columns plus the one-node layer at the
// line.
class Channel {
 public:
  char axis;           // 'v': vertical line x=line; 'h': horizontal y=line
  int line, side;      // strip occupies [line, line + side*m]
  int span0, span1;    // tangential node range
  int lo, hi;          // normal node range (sorted)

  Channel(char axis_, int line_, int side_, int span0_, int span1_,
          std::vector<cd> tan_alpha, const VelocityModel& model, double omega,
          const PmlProfile& prof)
      : axis(axis_), line(line_), side(side_), span0(span0_), span1(span1_) {
    const int m = prof.margin();
    const int far = line + side * m;
    lo = std::min(line, far);
    hi = std::max(line, far);
    a_norm = strip_alpha(line, far, prof);
    tan = std::move(tan_alpha);
    if (int(tan.size()) != span1 - span0 + 1)
      throw dimension_error("channel: tangential profile length mismatch");
    NodeRect rect = (axis == 'v') ? NodeRect{lo, hi, span0, span1}
                                  : NodeRect{span0, span1, lo, hi};
    std::vector<cd> ax = (axis == 'v') ? a_norm : tan;
    std::vector<cd> ay = (axis == 'v') ? tan : a_norm;
    op = RectOperator(rect, model.grid.hx, model.grid.hy, std::move(ax), std::move(ay),
                      sample_k_field(model, rect, omega, m), omega);
    fac = factorize_band(op.assemble_band());
  }

  // Trace values aligned to [span0..span1] -> strip field including the
  // trace layer on the line (tangential end values sit on the Dirichlet
  // ring and stay zero).
  FieldPatch extend_trace(const std::vector<cd>& tvals) const {
    check_span(tvals);
    std::vector<cd> rhs(size_t(op.n_unknowns()), cd(0, 0));
    const double ihx2 = 1.0 / (op.hx * op.hx), ihy2 = 1.0 / (op.hy * op.hy);
    const int near = line + side;  // first strip layer off the line
    bool any = false;
    for (int tgt = span0 + 1; tgt < span1; ++tgt) {
      cd tv = tvals[size_t(tgt - span0)];
      if (tv == cd(0, 0)) continue;
      any = true;
      if (axis == 'v')
        rhs[op.index(near, tgt)] -= op.edge_x(std::min(line, near), tgt) * ihx2 * tv;
      else
        rhs[op.index(tgt, near)] -= op.edge_y(tgt, std::min(line, near)) * ihy2 * tv;
    }
    FieldPatch u(op.ext);
    if (any) {
      fac.solve_inplace(rhs.data());
      u = embed_field(op, rhs);
    }
    for (int tgt = span0 + 1; tgt < span1; ++tgt) {
      if (axis == 'v')
        u.at(line, tgt) = tvals[size_t(tgt - span0)];
      else
        u.at(tgt, line) = tvals[size_t(tgt - span0)];
    }
    return u;
  }

  // Stencil-difference source of the zero-extended strip field. Rows run
  // over the full normal range [lo..hi]; tangentially strictly interior.
  std::vector<TransferRow> transfer_source(const FieldPatch& uhat) const {
    std::vector<TransferRow> out;
    const double ihx2 = 1.0 / (op.hx * op.hx), ihy2 = 1.0 / (op.hy * op.hy);
    if (axis == 'v') {
      for (int gx = lo; gx <= hi; ++gx) {
        const cd asC = an(gx), asE = an(gx + 1), asW = an(gx - 1);
        for (int gy = span0 + 1; gy < span1; ++gy) {
          const cd ayc = tan[size_t(gy - span0)];
          const cd ayN = tan[size_t(gy + 1 - span0)], ayS = tan[size_t(gy - 1 - span0)];
          const cd uc = uhat.get(gx, gy);
          const cd dAE = 0.5 * (ayc * (1.0 - 1.0 / asC) + ayc * (1.0 - 1.0 / asE));
          const cd dAW = 0.5 * (ayc * (1.0 - 1.0 / asC) + ayc * (1.0 - 1.0 / asW));
          const cd dAN = 0.5 * ((1.0 - asC) / ayc + (1.0 - asC) / ayN);
          const cd dAS = 0.5 * ((1.0 - asC) / ayc + (1.0 - asC) / ayS);
          const double k = op.kv(gx, gy);
          const cd val = (dAE * (uhat.get(gx + 1, gy) - uc) + dAW * (uhat.get(gx - 1, gy) - uc)) * ihx2 +
                         (dAN * (uhat.get(gx, gy + 1) - uc) + dAS * (uhat.get(gx, gy - 1) - uc)) * ihy2 +
                         ayc * (1.0 - asC) * (k * k) * uc;
          if (val != cd(0, 0)) out.push_back({gx, gy, -val});
        }
      }
    } else {
      for (int gy = lo; gy <= hi; ++gy) {
        const cd asC = an(gy), asN = an(gy + 1), asS = an(gy - 1);
        for (int gx = span0 + 1; gx < span1; ++gx) {
          const cd axc = tan[size_t(gx - span0)];
          const cd axE = tan[size_t(gx + 1 - span0)], axW = tan[size_t(gx - 1 - span0)];
          const cd uc = uhat.get(gx, gy);
          const cd dAE = 0.5 * ((1.0 - asC) / axc + (1.0 - asC) / axE);
          const cd dAW = 0.5 * ((1.0 - asC) / axc + (1.0 - asC) / axW);
          const cd dAN = 0.5 * (axc * (1.0 - 1.0 / asC) + axc * (1.0 - 1.0 / asN));
          const cd dAS = 0.5 * (axc * (1.0 - 1.0 / asC) + axc * (1.0 - 1.0 / asS));
          const double k = op.kv(gx, gy);
          const cd val = (dAE * (uhat.get(gx + 1, gy) - uc) + dAW * (uhat.get(gx - 1, gy) - uc)) * ihx2 +
                         (dAN * (uhat.get(gx, gy + 1) - uc) + dAS * (uhat.get(gx, gy - 1) - uc)) * ihy2 +
                         axc * (1.0 - asC) * (k * k) * uc;
          if (val != cd(0, 0)) out.push_back({gx, gy, -val});
        }
      }
    }
    return out;
  }

  std::vector<TransferRow> source(const std::vector<cd>& tvals) const {
    check_span(tvals);
    bool any = false;
    for (cd t : tvals)
      if (t != cd(0, 0)) { any = true; break; }
    if (!any) return {};
    return transfer_source(extend_trace(tvals));
  }

  const RectOperator& strip_op() const { return op; }

 private:
  std::vector<cd> a_norm;  // normal stretching over [lo..hi]
  std::vector<cd> tan;     // tangential stretching over [span0..span1]
  RectOperator op;
  BandFactor fac;

  // Normal stretching continued by 1 outside the strip (block interior).
  cd an(int c) const {
    return (lo <= c && c <= hi) ? a_norm[size_t(c - lo)] : cd(1, 0);
  }

  void check_span(const std::vector<cd>& tvals) const {
    if (int(tvals.size()) != span1 - span0 + 1)
      throw dimension_error("channel: trace length mismatch");
  }
};

// Channel for one ChannelSpec of a parent block: tangential stretching is
// the parent-side block profile over the channel span.
inline Channel make_channel(const ChannelSpec& cs, const VelocityModel& model,
                            double omega, const PmlProfile& prof) {
  return Channel(cs.axis, cs.line, cs.side, cs.span0, cs.span1,
                 block_alpha(cs.span0, cs.span1, prof), model, omega, prof);
}

// Trace samples at a node set, in its canonical order; nodes outside the
// patch read zero.
inline std::vector<cd> restrict_field(const FieldPatch& f, const NodeSet& nodes) {
  std::vector<cd> t(nodes.nodes.size());
  for (size_t q = 0; q < nodes.nodes.size(); ++q)
    t[q] = f.get(nodes.nodes[q].first, nodes.nodes[q].second);
  return t;
}

// Incident-trace response of one block: split the trace by skeleton line,
// extend each line into the strip on the block-interior side, add up the
// transfer sources, solve the block once. Values at a vertical/horizontal
// crossing belong to the vertical line (canonical node order lists them
// there). Tangential stretching of each extension is the block's own
// profile, so this realizes the single-block response map; the solver's
// cross-block exchanges instead use channels with the parent's profile.
inline FieldPatch apply_G(const Tree& tree, BlockId b, const VelocityModel& model,
                          double omega, const PmlProfile& prof,
                          const RectOperator& op, const BandFactor& fac,
                          const std::vector<cd>& incident) {
  NodeRect ext = tree.extended_rect(b);
  NodeRect inter = tree.interior_rect(b);
  auto lines = skeleton_lines(tree, b);
  NodeSet nodes = nodes_of_lines(lines);
  if (int(incident.size()) != nodes.size())
    throw dimension_error("apply_G: incident trace length mismatch");

  std::vector<cd> rhs(size_t(op.n_unknowns()), cd(0, 0));
  std::vector<int> vcoords;
  for (const auto& L : lines)
    if (L.axis == 'v') vcoords.push_back(L.coord);
  for (const auto& L : lines) {
    int mid2 = (L.axis == 'v') ? inter.x0 + inter.x1 : inter.y0 + inter.y1;
    int side = (2 * L.coord < mid2) ? +1 : -1;
    std::vector<cd> tv(size_t(L.s1 - L.s0 + 1), cd(0, 0));
    bool any = false;
    for (int t = L.s0; t <= L.s1; ++t) {
      int x = (L.axis == 'v') ? L.coord : t;
      int y = (L.axis == 'v') ? t : L.coord;
      if (L.axis == 'h' &&
          std::find(vcoords.begin(), vcoords.end(), x) != vcoords.end())
        continue;  // crossing node: counted on the vertical line
      int q = nodes.find(x, y);
      if (q >= 0 && incident[size_t(q)] != cd(0, 0)) {
        tv[size_t(t - L.s0)] = incident[size_t(q)];
        any = true;
      }
    }
    if (!any) continue;
    Channel ch(L.axis, L.coord, side, L.s0, L.s1,
               (L.axis == 'v') ? block_alpha(ext.y0, ext.y1, prof)
                               : block_alpha(ext.x0, ext.x1, prof),
               model, omega, prof);
    for (const auto& r : ch.source(tv))
      if (ext.strictly_inside(r.gx, r.gy)) rhs[op.index(r.gx, r.gy)] += r.val;
  }
  fac.solve_inplace(rhs.data());
  return embed_field(op, rhs);
}

struct TwoSubdomainResult {
  FieldPatch u;                 // accumulated sum over the union grid
  std::vector<double> history;  // per-sweep trace norms
};

// Standalone two-block source-transfer iteration: the domain splits into
// overlapping bottom/top halves at the interior mid-line. Each half keeps
// the source on its own side (mid-line rows go to the bottom), the halves
// exchange transfer sources through a channel pair on the mid-line, and
// every sweep's fields are summed into the result. Stops when the
// mid-line trace norm falls below tol relative to the first sweep; raises
// stagnation_error when the norm plateaus (reduction factor above 0.95
// averaged over 10 sweeps) or the sweep cap is hit.
inline TwoSubdomainResult two_subdomain_solve(const VelocityModel& model, double omega,
                                              const PmlProfile& prof,
                                              const std::vector<TransferRow>& f,
                                              double tol, int max_sweeps = 200) {
  const int m = prof.margin();
  if (model.grid.ny % 2 != 0) throw config_error("two-subdomain split needs even ny");
  const int nx = model.grid.nx + 2 * m, ny = model.grid.ny + 2 * m;
  const int mid = m + model.grid.ny / 2;

  NodeRect rb{0, nx, 0, mid + m}, rt{0, nx, mid - m, ny};
  RectOperator ob = make_block_operator(rb, model, omega, prof, m);
  RectOperator ot = make_block_operator(rt, model, omega, prof, m);
  BandFactor fb = factorize_band(ob.assemble_band());
  BandFactor ft = factorize_band(ot.assemble_band());

  auto tan = block_alpha(0, nx, prof);
  Channel up('h', mid, +1, 0, nx, tan, model, omega, prof);
  Channel dn('h', mid, -1, 0, nx, tan, model, omega, prof);

  std::vector<cd> rhs_b(size_t(ob.n_unknowns()), cd(0, 0));
  std::vector<cd> rhs_t(size_t(ot.n_unknowns()), cd(0, 0));
  for (const auto& r : f) {
    if (r.gy <= mid) {
      if (!rb.strictly_inside(r.gx, r.gy)) throw dimension_error("source outside lower half");
      rhs_b[ob.index(r.gx, r.gy)] += r.val;
    } else {
      if (!rt.strictly_inside(r.gx, r.gy)) throw dimension_error("source outside upper half");
      rhs_t[ot.index(r.gx, r.gy)] += r.val;
    }
  }

  TwoSubdomainResult res;
  res.u = FieldPatch(NodeRect{0, nx, 0, ny});
  double n0 = -1.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    std::vector<cd> ub = rhs_b, ut = rhs_t;
    fb.solve_inplace(ub.data());
    ft.solve_inplace(ut.data());
    FieldPatch pb = embed_field(ob, ub), pt = embed_field(ot, ut);
    res.u.add(pb);
    res.u.add(pt);

    std::vector<cd> tb(size_t(nx + 1)), tt(size_t(nx + 1));
    double tn2 = 0.0;
    for (int i = 0; i <= nx; ++i) {
      tb[size_t(i)] = pb.get(i, mid);
      tt[size_t(i)] = pt.get(i, mid);
      tn2 += std::norm(tb[size_t(i)]) + std::norm(tt[size_t(i)]);
    }
    double tn = std::sqrt(tn2);
    res.history.push_back(tn);
    if (n0 < 0.0) n0 = tn;
    if (n0 == 0.0 || tn <= tol * n0) return res;
    if (res.history.size() > 10) {
      size_t s = res.history.size();
      double ratio = 0.0;
      for (size_t q = s - 10; q < s; ++q) ratio += res.history[q] / res.history[q - 1];
      if (ratio / 10.0 > 0.95)
        throw stagnation_error("two-subdomain iteration stagnated", 1, 0, 0);
    }

    std::fill(rhs_b.begin(), rhs_b.end(), cd(0, 0));
    std::fill(rhs_t.begin(), rhs_t.end(), cd(0, 0));
    for (const auto& r : up.source(tb))
      if (rt.strictly_inside(r.gx, r.gy)) rhs_t[ot.index(r.gx, r.gy)] += r.val;
    for (const auto& r : dn.source(tt))
      if (rb.strictly_inside(r.gx, r.gy)) rhs_b[ob.index(r.gx, r.gy)] += r.val;
  }
  throw stagnation_error("two-subdomain iteration hit the sweep cap", 1, 0, 0);
}

}  // namespace helmprop
