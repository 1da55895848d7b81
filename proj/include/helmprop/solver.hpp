#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <utility>
#include <vector>

#include "band_lu.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "operator.hpp"
#include "parallel.hpp"
#include "pml.hpp"
#include "quadtree.hpp"
#include "transfer.hpp"

namespace helmprop {

struct LeafWork {
  BlockId id;
  NodeRect ext;
  RectOperator op;
  BandFactor fac;
  NodeSet skel;
  std::vector<cd> rhs_acc;  // every injection this leaf ever received
};

struct ParentWork {
  BlockId id;
  NodeRect ext;
  std::pair<int, int> cross;
  NodeSet skel;       // ancestor lines (empty at the root)
  NodeSet cross_set;  // own cross lines, crossing node once
  std::vector<ChannelSpec> specs;
  std::vector<Channel> chans;
};

struct LevelTiming {
  int level = 0;
  int count = 0;       // factorizations built on this level
  double seconds = 0;
};

struct SolveResult {
  FieldPatch u;                      // union sum over the padded grid
  double residual = 0.0;             // ||A u - b|| / ||b||, global operator
  std::vector<double> root_history;  // root-level per-sweep trace norms
  std::vector<long> sweeps_by_level;
};

// Hierarchical source-transfer solver. Setup factors every leaf operator
// and every parent's six channel strips. A solve runs one recursive
// exchange pass from the root: each non-leaf block iterates its four
// children, sending each sweep's cross-line traces through the channels
// and re-responding the children on the arrivals, while every rhs row a
// leaf ever receives also lands in that leaf's accumulator. Because all
// operators are linear, replaying the recorded accumulators through one
// final solve per leaf and summing the patches over their extents
// reproduces the sum of every per-sweep field, which is the method's
// output; the descent is therefore a single gather.
class HierSolver {
 public:
  Tree tree;
  const VelocityModel* model = nullptr;
  double omega = 0.0;
  PmlProfile prof;
  double tol_trace = 1e-8;
  int max_sweeps = 200;
  int workers = 1;
  double inner_tighten = 1e-2;  // child iterations run this much tighter
  std::vector<LevelTiming> setup_log;

  HierSolver(const VelocityModel& m, double omega_, const PmlProfile& prof_,
             int n_levels, int block_cells)
      : model(&m), omega(omega_), prof(prof_) {
    tree = Tree::build(n_levels, block_cells, prof.margin(), m.grid.nx, m.grid.ny);
    using clock = std::chrono::steady_clock;

    auto t0 = clock::now();
    int nb = tree.blocks_per_axis(0);
    leaves_.reserve(size_t(nb) * nb);
    for (int bi = 0; bi < nb; ++bi)
      for (int bj = 0; bj < nb; ++bj) {
        BlockId id{0, bi, bj};
        LeafWork lw;
        lw.id = id;
        lw.ext = tree.extended_rect(id);
        lw.op = make_block_operator(lw.ext, m, omega, prof, tree.margin);
        lw.fac = factorize_band(lw.op.assemble_band());
        lw.skel = skeleton_nodes(tree, id);
        lw.rhs_acc.assign(size_t(lw.op.n_unknowns()), cd(0, 0));
        leaves_.push_back(std::move(lw));
      }
    setup_log.push_back({0, nb * nb,
                         std::chrono::duration<double>(clock::now() - t0).count()});

    parents_.resize(size_t(tree.n_levels));
    for (int l = 1; l <= tree.n_levels; ++l) {
      t0 = clock::now();
      int nbl = tree.blocks_per_axis(l);
      auto& row = parents_[size_t(l - 1)];
      row.reserve(size_t(nbl) * nbl);
      for (int bi = 0; bi < nbl; ++bi)
        for (int bj = 0; bj < nbl; ++bj) {
          BlockId id{l, bi, bj};
          ParentWork pw;
          pw.id = id;
          pw.ext = tree.extended_rect(id);
          pw.cross = tree.cross(id);
          pw.skel = skeleton_nodes(tree, id);
          pw.cross_set = nodes_of_lines(cross_lines(tree, id));
          pw.specs = sibling_routing(tree, id);
          pw.chans.reserve(pw.specs.size());
          for (const auto& cs : pw.specs) pw.chans.push_back(make_channel(cs, m, omega, prof));
          row.push_back(std::move(pw));
        }
      setup_log.push_back({l, nbl * nbl,
                           std::chrono::duration<double>(clock::now() - t0).count()});
    }
  }

  LeafWork& leaf(int bi, int bj) {
    return leaves_[size_t(bi) * tree.blocks_per_axis(0) + size_t(bj)];
  }
  ParentWork& parent_work(BlockId id) {
    return parents_[size_t(id.level - 1)]
                   [size_t(id.bi) * tree.blocks_per_axis(id.level) + size_t(id.bj)];
  }
  const NodeSet& skeleton_of(BlockId id) {
    return id.level == 0 ? leaf(id.bi, id.bj).skel : parent_work(id).skel;
  }

  // Exchange pass plus final gather for one right-hand side, given as rhs
  // rows in padded-grid coordinates.
  SolveResult solve(const std::vector<TransferRow>& f) {
    for (auto& lw : leaves_) std::fill(lw.rhs_acc.begin(), lw.rhs_acc.end(), cd(0, 0));
    sweeps_ = std::vector<std::atomic<long>>(size_t(tree.n_levels) + 1);

    SolveResult res;
    respond(tree.root(), f, tol_trace, &res.root_history);

    res.u = FieldPatch(NodeRect{0, tree.n, 0, tree.n});
    for (auto& lw : leaves_) {
      std::vector<cd> u = lw.rhs_acc;
      lw.fac.solve_inplace(u.data());
      res.u.add(embed_field(lw.op, u));
    }

    RectOperator glob = make_block_operator(NodeRect{0, tree.n, 0, tree.n}, *model,
                                            omega, prof, tree.margin);
    std::vector<cd> b(size_t(glob.n_unknowns()), cd(0, 0));
    for (const auto& r : f) b[glob.index(r.gx, r.gy)] += r.val;
    std::vector<cd> uin(size_t(glob.n_unknowns()));
    for (int j = 1; j < tree.n; ++j)
      for (int i = 1; i < tree.n; ++i) uin[glob.index(i, j)] = res.u.at(i, j);
    std::vector<cd> au = glob.apply(uin);
    double rn = 0.0, bn = 0.0;
    for (size_t q = 0; q < au.size(); ++q) {
      rn += std::norm(au[q] - b[q]);
      bn += std::norm(b[q]);
    }
    res.residual = bn > 0.0 ? std::sqrt(rn / bn) : std::sqrt(rn);
    for (const auto& s : sweeps_) res.sweeps_by_level.push_back(s.load());
    return res;
  }

  // Accumulated skeleton trace of one block's response to injected rows.
  // Leaves solve and record; non-leaf blocks run the sibling iteration,
  // accumulating every sweep's child traces at their own skeleton nodes.
  std::vector<cd> respond(BlockId b, const std::vector<TransferRow>& rows, double tol,
                          std::vector<double>* history = nullptr) {
    if (b.level == 0) {
      LeafWork& lw = leaf(b.bi, b.bj);
      std::vector<cd> rhs(size_t(lw.op.n_unknowns()), cd(0, 0));
      for (const auto& r : rows) {
        if (!lw.ext.strictly_inside(r.gx, r.gy))
          throw dimension_error("leaf injection outside extent");
        rhs[lw.op.index(r.gx, r.gy)] += r.val;
        lw.rhs_acc[lw.op.index(r.gx, r.gy)] += r.val;
      }
      lw.fac.solve_inplace(rhs.data());
      std::vector<cd> tr(lw.skel.nodes.size(), cd(0, 0));
      for (size_t q = 0; q < lw.skel.nodes.size(); ++q) {
        auto [x, y] = lw.skel.nodes[q];
        if (lw.ext.strictly_inside(x, y)) tr[q] = rhs[lw.op.index(x, y)];
      }
      return tr;
    }

    ParentWork& pw = parent_work(b);
    const double tol_inner = std::max(tol * inner_tighten, 1e-13);

    std::array<BlockId, 4> kid;
    std::array<NodeRect, 4> kext;
    for (int ci = 0; ci < 2; ++ci)
      for (int cj = 0; cj < 2; ++cj) {
        kid[size_t(ci * 2 + cj)] = tree.child(b, ci, cj);
        kext[size_t(ci * 2 + cj)] = tree.extended_rect(kid[size_t(ci * 2 + cj)]);
      }

    std::array<std::vector<TransferRow>, 4> batch;
    for (const auto& r : rows) {
      BlockId o = tree.owner_child(b, r.gx, r.gy);
      int c = (o.bi - 2 * b.bi) * 2 + (o.bj - 2 * b.bj);
      if (!kext[size_t(c)].strictly_inside(r.gx, r.gy))
        throw dimension_error("routed injection outside owner child extent");
      batch[size_t(c)].push_back(r);
    }

    std::vector<cd> ptrace(pw.skel.nodes.size(), cd(0, 0));
    std::array<std::vector<cd>, 4> cur;
    auto respond_children = [&] {
      parallel_for(4, workers, [&](int c) {
        cur[size_t(c)] = respond(kid[size_t(c)], batch[size_t(c)], tol_inner);
      });
      for (int c = 0; c < 4; ++c) {
        const NodeSet& cs = skeleton_of(kid[size_t(c)]);
        for (size_t q = 0; q < pw.skel.nodes.size(); ++q) {
          auto [x, y] = pw.skel.nodes[q];
          if (kext[size_t(c)].contains(x, y)) {
            int idx = cs.find(x, y);
            if (idx >= 0) ptrace[q] += cur[size_t(c)][size_t(idx)];
          }
        }
      }
    };
    auto cross_norm = [&] {
      double s = 0.0;
      for (int c = 0; c < 4; ++c) {
        const NodeSet& cs = skeleton_of(kid[size_t(c)]);
        for (auto [x, y] : pw.cross_set.nodes) {
          if (!kext[size_t(c)].contains(x, y)) continue;
          int idx = cs.find(x, y);
          if (idx >= 0) s += std::norm(cur[size_t(c)][size_t(idx)]);
        }
      }
      return std::sqrt(s);
    };

    respond_children();
    double n0 = cross_norm(), tn = n0;
    std::vector<double> hist{tn};
    for (int sweep = 0; n0 > 0.0 && tn > tol * n0; ++sweep) {
      if (sweep >= max_sweeps)
        throw stagnation_error("sibling iteration hit the sweep cap", b.level, b.bi, b.bj);
      if (hist.size() > 10) {
        double ratio = 0.0;
        for (size_t q = hist.size() - 10; q < hist.size(); ++q)
          ratio += hist[q] / hist[q - 1];
        if (ratio / 10.0 > 0.95)
          throw stagnation_error("sibling iteration stagnated", b.level, b.bi, b.bj);
      }
      sweeps_[size_t(b.level)].fetch_add(1, std::memory_order_relaxed);

      for (auto& v : batch) v.clear();
      for (size_t k = 0; k < pw.chans.size(); ++k) {
        const ChannelSpec& cs = pw.specs[k];
        const Channel& ch = pw.chans[k];
        std::vector<cd> tv(size_t(cs.span1 - cs.span0 + 1), cd(0, 0));
        for (auto [si, sj] : cs.senders) {
          int c = si * 2 + sj;
          const NodeSet& ns = skeleton_of(kid[size_t(c)]);
          const NodeRect& e = kext[size_t(c)];
          int t0 = (cs.axis == 'v') ? e.y0 : e.x0;
          int t1 = (cs.axis == 'v') ? e.y1 : e.x1;
          for (int t = std::max(t0, cs.span0); t <= std::min(t1, cs.span1); ++t) {
            int x = (cs.axis == 'v') ? cs.line : t;
            int y = (cs.axis == 'v') ? t : cs.line;
            int idx = ns.find(x, y);
            if (idx >= 0) tv[size_t(t - cs.span0)] += cur[size_t(c)][size_t(idx)];
          }
        }
        for (const auto& r : ch.source(tv)) {
          auto [ri, rj] = channel_receiver(cs, r.gx, r.gy);
          int c = ri * 2 + rj;
          if (kext[size_t(c)].strictly_inside(r.gx, r.gy)) batch[size_t(c)].push_back(r);
        }
      }

      respond_children();
      tn = cross_norm();
      hist.push_back(tn);
    }
    if (history) *history = std::move(hist);
    return ptrace;
  }

  const std::vector<LeafWork>& leaves() const { return leaves_; }

 private:
  std::vector<LeafWork> leaves_;
  std::vector<std::vector<ParentWork>> parents_;
  std::vector<std::atomic<long>> sweeps_;
};

// Single-level four-block iteration with plain field accumulation: the
// same exchange as HierSolver restricted to one parent, but summing every
// sweep's fields directly instead of recording injections. Kept as an
// independent reference implementation of the flat method.
inline SolveResult flat_four_block_solve(const VelocityModel& model, double omega,
                                         const PmlProfile& prof, int block_cells,
                                         const std::vector<TransferRow>& f, double tol,
                                         int max_sweeps = 200) {
  Tree tree = Tree::build(1, block_cells, prof.margin(), model.grid.nx, model.grid.ny);
  BlockId root = tree.root();
  auto specs = sibling_routing(tree, root);
  std::vector<Channel> chans;
  for (const auto& cs : specs) chans.push_back(make_channel(cs, model, omega, prof));
  NodeSet cross_set = nodes_of_lines(cross_lines(tree, root));

  std::array<BlockId, 4> kid;
  std::array<NodeRect, 4> kext;
  std::array<RectOperator, 4> kop;
  std::array<BandFactor, 4> kfac;
  for (int ci = 0; ci < 2; ++ci)
    for (int cj = 0; cj < 2; ++cj) {
      int c = ci * 2 + cj;
      kid[size_t(c)] = tree.child(root, ci, cj);
      kext[size_t(c)] = tree.extended_rect(kid[size_t(c)]);
      kop[size_t(c)] = make_block_operator(kext[size_t(c)], model, omega, prof, tree.margin);
      kfac[size_t(c)] = factorize_band(kop[size_t(c)].assemble_band());
    }

  std::array<std::vector<TransferRow>, 4> batch;
  for (const auto& r : f) {
    BlockId o = tree.owner_child(root, r.gx, r.gy);
    int c = o.bi * 2 + o.bj;
    if (!kext[size_t(c)].strictly_inside(r.gx, r.gy))
      throw dimension_error("source outside owner block extent");
    batch[size_t(c)].push_back(r);
  }

  SolveResult res;
  res.u = FieldPatch(NodeRect{0, tree.n, 0, tree.n});
  std::array<FieldPatch, 4> fields;
  auto sweep_once = [&] {
    for (int c = 0; c < 4; ++c) {
      std::vector<cd> rhs(size_t(kop[size_t(c)].n_unknowns()), cd(0, 0));
      for (const auto& r : batch[size_t(c)])
        rhs[kop[size_t(c)].index(r.gx, r.gy)] += r.val;
      kfac[size_t(c)].solve_inplace(rhs.data());
      fields[size_t(c)] = embed_field(kop[size_t(c)], rhs);
      res.u.add(fields[size_t(c)]);
    }
    double s = 0.0;
    for (int c = 0; c < 4; ++c)
      for (auto [x, y] : cross_set.nodes)
        if (kext[size_t(c)].contains(x, y)) s += std::norm(fields[size_t(c)].at(x, y));
    return std::sqrt(s);
  };

  double tn = sweep_once(), n0 = tn;
  res.root_history.push_back(tn);
  for (int sweep = 0; n0 > 0.0 && tn > tol * n0; ++sweep) {
    if (sweep >= max_sweeps)
      throw stagnation_error("flat iteration hit the sweep cap", 1, 0, 0);
    for (auto& v : batch) v.clear();
    for (size_t k = 0; k < chans.size(); ++k) {
      const ChannelSpec& cs = specs[k];
      std::vector<cd> tv(size_t(cs.span1 - cs.span0 + 1), cd(0, 0));
      for (auto [si, sj] : cs.senders) {
        int c = si * 2 + sj;
        const NodeRect& e = kext[size_t(c)];
        int t0 = (cs.axis == 'v') ? e.y0 : e.x0;
        int t1 = (cs.axis == 'v') ? e.y1 : e.x1;
        for (int t = std::max(t0, cs.span0); t <= std::min(t1, cs.span1); ++t) {
          int x = (cs.axis == 'v') ? cs.line : t;
          int y = (cs.axis == 'v') ? t : cs.line;
          tv[size_t(t - cs.span0)] += fields[size_t(c)].at(x, y);
        }
      }
      for (const auto& r : chans[k].source(tv)) {
        auto [ri, rj] = channel_receiver(cs, r.gx, r.gy);
        int c = ri * 2 + rj;
        if (kext[size_t(c)].strictly_inside(r.gx, r.gy)) batch[size_t(c)].push_back(r);
      }
    }
    tn = sweep_once();
    res.root_history.push_back(tn);
  }
  return res;
}

// Global band-LU reference on the padded grid; returns the full nodal
// field. The workhorse oracle for validation.
inline FieldPatch direct_solve(const VelocityModel& model, double omega,
                               const PmlProfile& prof,
                               const std::vector<TransferRow>& f) {
  int m = prof.margin();
  NodeRect ext{0, model.grid.nx + 2 * m, 0, model.grid.ny + 2 * m};
  RectOperator op = make_block_operator(ext, model, omega, prof, m);
  BandFactor fac = factorize_band(op.assemble_band());
  std::vector<cd> rhs(size_t(op.n_unknowns()), cd(0, 0));
  for (const auto& r : f) {
    if (!ext.strictly_inside(r.gx, r.gy)) throw dimension_error("source outside domain");
    rhs[op.index(r.gx, r.gy)] += r.val;
  }
  fac.solve_inplace(rhs.data());
  return embed_field(op, rhs);
}

}  // namespace helmprop
