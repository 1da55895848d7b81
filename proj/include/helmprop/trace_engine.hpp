#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "band_lu.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "operator.hpp"
#include "parallel.hpp"
#include "pml.hpp"
#include "quadtree.hpp"
#include "transfer.hpp"

namespace helmprop {

// Dense linear map from rhs injections to trace responses: column q is
// the block's accumulated trace at `rows` when a unit rhs is placed at
// the q-th injection node. Column-major.
struct TraceMap {
  BlockId id;
  int rows = 0, cols = 0;
  std::vector<cd> a;

  TraceMap() = default;
  TraceMap(BlockId id_, int rows_, int cols_)
      : id(id_), rows(rows_), cols(cols_), a(size_t(rows_) * cols_, cd(0, 0)) {}

  cd& at(int r, int c) { return a[size_t(c) * rows + size_t(r)]; }
  cd at(int r, int c) const { return a[size_t(c) * rows + size_t(r)]; }

  std::vector<cd> apply(const std::vector<cd>& inj) const {
    if (int(inj.size()) != cols) throw dimension_error("trace map: injection length mismatch");
    std::vector<cd> out(size_t(rows), cd(0, 0));
    for (int c = 0; c < cols; ++c) {
      const cd v = inj[size_t(c)];
      if (v == cd(0, 0)) continue;
      const cd* col = &a[size_t(c) * rows];
      for (int r = 0; r < rows; ++r) out[size_t(r)] += col[r] * v;
    }
    return out;
  }

  // out += column c scaled by v, into a caller-held row buffer.
  void axpy_col(int c, cd v, cd* out) const {
    const cd* col = &a[size_t(c) * rows];
    for (int r = 0; r < rows; ++r) out[r] += col[r] * v;
  }
};

// Every node a transfer channel can inject into the block: within margin
// of one of the given lines, inside the line's tangential range, strictly
// inside the block's extent. Deduplicated, ordered by (x, y).
inline NodeSet injection_nodes(const Tree& t, BlockId b, const std::vector<LineSeg>& lines) {
  NodeRect ext = t.extended_rect(b);
  std::vector<std::pair<int, int>> pts;
  for (const auto& L : lines)
    for (int d = -t.margin; d <= t.margin; ++d)
      for (int s = L.s0; s <= L.s1; ++s) {
        int x = (L.axis == 'v') ? L.coord + d : s;
        int y = (L.axis == 'v') ? s : L.coord + d;
        if (ext.strictly_inside(x, y)) pts.emplace_back(x, y);
      }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  NodeSet ns;
  for (auto [x, y] : pts) ns.add(x, y);
  return ns;
}

// Monolithic construction: one factorization of the block's own operator,
// one solve per injection node, sampled at the row nodes. Columns are
// independent, so they may be built on any worker count with identical
// results.
inline TraceMap build_map_direct(BlockId id, const RectOperator& op, const BandFactor& fac,
                                 const NodeSet& rowset, const NodeSet& colset,
                                 int workers = 1) {
  TraceMap map(id, rowset.size(), colset.size());
  parallel_for(colset.size(), workers, [&](int c) {
    auto [qx, qy] = colset.nodes[size_t(c)];
    std::vector<cd> rhs(size_t(op.n_unknowns()), cd(0, 0));
    rhs[op.index(qx, qy)] = cd(1, 0);
    fac.solve_inplace(rhs.data());
    for (int r = 0; r < map.rows; ++r) {
      auto [x, y] = rowset.nodes[size_t(r)];
      if (op.ext.strictly_inside(x, y)) map.at(r, c) = rhs[op.index(x, y)];
    }
  });
  return map;
}

// Level-0 map of a leaf: rows are its skeleton, columns its injection set.
inline TraceMap build_map_level0(const Tree& tree, BlockId b, const VelocityModel& model,
                                 double omega, const PmlProfile& prof, int workers = 1) {
  NodeRect ext = tree.extended_rect(b);
  RectOperator op = make_block_operator(ext, model, omega, prof, tree.margin);
  BandFactor fac = factorize_band(op.assemble_band());
  NodeSet rowset = skeleton_nodes(tree, b);
  NodeSet colset = injection_nodes(tree, b, skeleton_lines(tree, b));
  return build_map_direct(b, op, fac, rowset, colset, workers);
}

// Recursive construction of a parent map from its four children's maps:
// every column starts as a unit injection routed to its owner child, and
// the sibling iteration then exchanges each sweep's cross-line traces
// through the parent's channels, all columns advancing together. The
// parent's map accumulates each sweep's child traces at the parent row
// nodes. Row/column node sets are passed in so the same routine serves
// ordinary parents (skeleton rows) and a root block probed on its own
// cross lines.
inline TraceMap build_map_from_children(const Tree& tree, BlockId b,
                                        const std::array<const TraceMap*, 4>& charts,
                                        const VelocityModel& model, double omega,
                                        const PmlProfile& prof, const NodeSet& rowset,
                                        const NodeSet& colset, double tol = 1e-8,
                                        int max_sweeps = 200, int workers = 1) {
  auto specs = sibling_routing(tree, b);
  std::vector<Channel> chans;
  for (const auto& cs : specs) chans.push_back(make_channel(cs, model, omega, prof));
  NodeSet cross_set = nodes_of_lines(cross_lines(tree, b));

  std::array<BlockId, 4> kid;
  std::array<NodeRect, 4> kext;
  std::array<NodeSet, 4> kskel, kinj;
  for (int ci = 0; ci < 2; ++ci)
    for (int cj = 0; cj < 2; ++cj) {
      int c = ci * 2 + cj;
      kid[size_t(c)] = tree.child(b, ci, cj);
      kext[size_t(c)] = tree.extended_rect(kid[size_t(c)]);
      kskel[size_t(c)] = skeleton_nodes(tree, kid[size_t(c)]);
      kinj[size_t(c)] = injection_nodes(tree, kid[size_t(c)], skeleton_lines(tree, kid[size_t(c)]));
      if (charts[size_t(c)]->rows != kskel[size_t(c)].size() ||
          charts[size_t(c)]->cols != kinj[size_t(c)].size())
        throw dimension_error("child map dimensions mismatch its node sets");
    }

  const int ncol = colset.size();
  TraceMap map(b, rowset.size(), ncol);

  // Per-column arrival lists per child; (injection index, value).
  using Arrival = std::pair<int, cd>;
  std::array<std::vector<std::vector<Arrival>>, 4> batch;
  for (auto& v : batch) v.assign(size_t(ncol), {});
  for (int c = 0; c < ncol; ++c) {
    auto [qx, qy] = colset.nodes[size_t(c)];
    BlockId o = tree.owner_child(b, qx, qy);
    int k = (o.bi - 2 * b.bi) * 2 + (o.bj - 2 * b.bj);
    int j = kinj[size_t(k)].find(qx, qy);
    if (j < 0) throw dimension_error("injection node missing from owner child set");
    batch[size_t(k)][size_t(c)].push_back({j, cd(1, 0)});
  }

  // Current child traces, skeleton-rows x ncol, column-major.
  std::array<std::vector<cd>, 4> cur;
  auto respond_children = [&] {
    parallel_for(4, workers, [&](int k) {
      const TraceMap& M = *charts[size_t(k)];
      auto& T = cur[size_t(k)];
      T.assign(size_t(M.rows) * ncol, cd(0, 0));
      for (int c = 0; c < ncol; ++c)
        for (const auto& [j, v] : batch[size_t(k)][size_t(c)])
          M.axpy_col(j, v, &T[size_t(c) * M.rows]);
    });
    for (int k = 0; k < 4; ++k) {
      const TraceMap& M = *charts[size_t(k)];
      for (int r = 0; r < map.rows; ++r) {
        auto [x, y] = rowset.nodes[size_t(r)];
        if (!kext[size_t(k)].contains(x, y)) continue;
        int idx = kskel[size_t(k)].find(x, y);
        if (idx < 0) continue;
        for (int c = 0; c < ncol; ++c) map.at(r, c) += cur[size_t(k)][size_t(c) * M.rows + size_t(idx)];
      }
    }
  };

  std::vector<double> n0(size_t(ncol), 0.0), tn(size_t(ncol), 0.0);
  auto column_norms = [&](std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int k = 0; k < 4; ++k) {
      const TraceMap& M = *charts[size_t(k)];
      for (auto [x, y] : cross_set.nodes) {
        if (!kext[size_t(k)].contains(x, y)) continue;
        int idx = kskel[size_t(k)].find(x, y);
        if (idx < 0) continue;
        for (int c = 0; c < ncol; ++c)
          out[size_t(c)] += std::norm(cur[size_t(k)][size_t(c) * M.rows + size_t(idx)]);
      }
    }
    for (auto& v : out) v = std::sqrt(v);
  };
  auto worst_ratio = [&] {
    double w = 0.0;
    for (int c = 0; c < ncol; ++c)
      if (n0[size_t(c)] > 0.0) w = std::max(w, tn[size_t(c)] / n0[size_t(c)]);
    return w;
  };

  respond_children();
  column_norms(n0);
  tn = n0;
  std::vector<double> hist{worst_ratio()};
  for (int sweep = 0; worst_ratio() > tol; ++sweep) {
    if (sweep >= max_sweeps)
      throw stagnation_error("map construction hit the sweep cap", b.level, b.bi, b.bj);
    if (hist.size() > 10) {
      double ratio = 0.0;
      for (size_t q = hist.size() - 10; q < hist.size(); ++q)
        ratio += hist[q] / hist[q - 1];
      if (ratio / 10.0 > 0.95)
        throw stagnation_error("map construction stagnated", b.level, b.bi, b.bj);
    }

    for (auto& v : batch)
      for (auto& col : v) col.clear();
    std::vector<cd> tv;
    for (size_t ki = 0; ki < chans.size(); ++ki) {
      const ChannelSpec& cs = specs[ki];
      const int span = cs.span1 - cs.span0 + 1;
      for (int c = 0; c < ncol; ++c) {
        tv.assign(size_t(span), cd(0, 0));
        for (auto [si, sj] : cs.senders) {
          int k = si * 2 + sj;
          const TraceMap& M = *charts[size_t(k)];
          const NodeRect& e = kext[size_t(k)];
          int t0 = (cs.axis == 'v') ? e.y0 : e.x0;
          int t1 = (cs.axis == 'v') ? e.y1 : e.x1;
          for (int t = std::max(t0, cs.span0); t <= std::min(t1, cs.span1); ++t) {
            int x = (cs.axis == 'v') ? cs.line : t;
            int y = (cs.axis == 'v') ? t : cs.line;
            int idx = kskel[size_t(k)].find(x, y);
            if (idx >= 0) tv[size_t(t - cs.span0)] += cur[size_t(k)][size_t(c) * M.rows + size_t(idx)];
          }
        }
        for (const auto& r : chans[ki].source(tv)) {
          auto [ri, rj] = channel_receiver(cs, r.gx, r.gy);
          int k = ri * 2 + rj;
          if (!kext[size_t(k)].strictly_inside(r.gx, r.gy)) continue;
          int j = kinj[size_t(k)].find(r.gx, r.gy);
          if (j < 0) throw dimension_error("channel row missing from receiver injection set");
          batch[size_t(k)][size_t(c)].push_back({j, r.val});
        }
      }
    }

    respond_children();
    column_norms(tn);
    hist.push_back(worst_ratio());
  }
  return map;
}

// Cache key: FNV-1a over the model bytes and run parameters.
inline uint64_t map_cache_key(const VelocityModel& model, double omega,
                              const PmlProfile& prof, int n_levels, int block_cells,
                              BlockId b) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, size_t n) {
    const unsigned char* s = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= s[i];
      h *= 1099511628211ull;
    }
  };
  mix(model.c.data(), model.c.size() * sizeof(double));
  double g[4] = {model.grid.hx, model.grid.hy, omega, prof.sigma0};
  int gi[7] = {model.grid.nx, model.grid.ny, prof.w_pml, prof.t_nonabs,
               n_levels, block_cells, (b.level << 20) | (b.bi << 10) | b.bj};
  mix(g, sizeof(g));
  mix(gi, sizeof(gi));
  return h;
}

inline std::string map_cache_path(const std::string& dir, uint64_t key) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(key));
  return dir + "/map-" + buf + ".tmap";
}

inline bool try_load_map(const std::string& path, BlockId b, int rows, int cols,
                         TraceMap& out) {
  TmapRecord rec;
  try {
    rec = read_tmap(path);
  } catch (const io_error&) {
    return false;
  }
  if (rec.level != b.level || rec.bi != b.bi || rec.bj != b.bj ||
      rec.rows != uint64_t(rows) || rec.cols != uint64_t(cols))
    return false;
  out = TraceMap(b, rows, cols);
  out.a = std::move(rec.entries);
  return true;
}

inline void store_map(const std::string& path, const TraceMap& m) {
  write_tmap(path, m.id.level, m.id.bi, m.id.bj, uint64_t(m.rows), uint64_t(m.cols), m.a);
}

}  // namespace helmprop
