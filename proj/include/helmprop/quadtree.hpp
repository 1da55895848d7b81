#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace helmprop {

struct BlockId {
  int level = 0, bi = 0, bj = 0;
  bool operator==(const BlockId&) const = default;
};

// Quadtree over the padded solver grid. The model interior occupies
// [margin, margin + interior] per axis; the outer margin ring is the
// global absorbing layer. Leaf blocks live at level 0, the root at level
// n_levels. A block's extended extent is its interior grown by margin on
// every side; with the padded grid this never needs clipping, so extents
// at every level stay symmetric about the interior and a non-leaf's cross
// point is the midpoint of both rects.
struct Tree {
  int n_levels = 1;
  int block_cells = 0;
  int margin = 0;
  int interior = 0;  // model cells per axis
  int n = 0;         // solver cells per axis

  static Tree build(int n_levels, int block_cells, int margin, int model_nx,
                    int model_ny) {
    if (n_levels < 1) throw config_error("n_levels must be >= 1");
    if (block_cells < 2) throw config_error("block_cells must be >= 2");
    if (margin < 1) throw config_error("pml margin must be >= 1");
    Tree t;
    t.n_levels = n_levels;
    t.block_cells = block_cells;
    t.margin = margin;
    t.interior = block_cells << n_levels;
    t.n = t.interior + 2 * margin;
    if (model_nx != t.interior || model_ny != t.interior)
      throw config_error("model grid must be " + std::to_string(t.interior) +
                         "^2 cells for block_cells=" + std::to_string(block_cells) +
                         ", n_levels=" + std::to_string(n_levels) + "; got " +
                         std::to_string(model_nx) + "x" + std::to_string(model_ny));
    if (block_cells < margin)
      throw config_error("block_cells must be >= the pml margin");
    return t;
  }

  int blocks_per_axis(int level) const { return 1 << (n_levels - level); }

  bool valid(BlockId b) const {
    return b.level >= 0 && b.level <= n_levels && b.bi >= 0 && b.bj >= 0 &&
           b.bi < blocks_per_axis(b.level) && b.bj < blocks_per_axis(b.level);
  }

  BlockId root() const { return {n_levels, 0, 0}; }

  NodeRect interior_rect(BlockId b) const {
    int s = block_cells << b.level;
    return {margin + b.bi * s, margin + (b.bi + 1) * s,
            margin + b.bj * s, margin + (b.bj + 1) * s};
  }

  NodeRect extended_rect(BlockId b) const {
    NodeRect r = interior_rect(b);
    return {std::max(0, r.x0 - margin), std::min(n, r.x1 + margin),
            std::max(0, r.y0 - margin), std::min(n, r.y1 + margin)};
  }

  std::pair<int, int> cross(BlockId b) const {
    if (b.level < 1) throw dimension_error("leaf block has no cross point");
    NodeRect r = interior_rect(b);
    return {(r.x0 + r.x1) / 2, (r.y0 + r.y1) / 2};
  }

  BlockId parent(BlockId b) const {
    if (b.level >= n_levels) throw dimension_error("root block has no parent");
    return {b.level + 1, b.bi / 2, b.bj / 2};
  }

  BlockId child(BlockId b, int ci, int cj) const {
    if (b.level < 1) throw dimension_error("leaf block has no children");
    return {b.level - 1, 2 * b.bi + ci, 2 * b.bj + cj};
  }

  // Quadrant owner of a node under a non-leaf block; nodes on the cross
  // lines tie toward the lower-index child.
  BlockId owner_child(BlockId b, int gx, int gy) const {
    auto [vx, hy] = cross(b);
    return child(b, gx <= vx ? 0 : 1, gy <= hy ? 0 : 1);
  }

  BlockId owner_leaf(int gx, int gy) const {
    BlockId b = root();
    while (b.level > 0) b = owner_child(b, gx, gy);
    return b;
  }
};

// Axis-aligned node segment: axis 'v' is {x=coord} x [s0, s1], axis 'h'
// is [s0, s1] x {y=coord}.
struct LineSeg {
  char axis = 'v';
  int coord = 0;
  int s0 = 0, s1 = 0;
  bool operator==(const LineSeg&) const = default;
};

// Ordered node list with coordinate lookup.
struct NodeSet {
  std::vector<std::pair<int, int>> nodes;
  std::unordered_map<int64_t, int> index;

  static int64_t key(int x, int y) { return (int64_t(x) << 32) | uint32_t(y); }

  void add(int x, int y) {
    auto [it, fresh] = index.try_emplace(key(x, y), int(nodes.size()));
    if (fresh) nodes.emplace_back(x, y);
  }

  int find(int x, int y) const {
    auto it = index.find(key(x, y));
    return it == index.end() ? -1 : it->second;
  }

  int size() const { return int(nodes.size()); }
};

inline NodeSet nodes_of_lines(const std::vector<LineSeg>& lines) {
  NodeSet s;
  for (const auto& L : lines) {
    if (L.axis == 'v')
      for (int y = L.s0; y <= L.s1; ++y) s.add(L.coord, y);
    else
      for (int x = L.s0; x <= L.s1; ++x) s.add(x, L.coord);
  }
  return s;
}

// Cross mid-lines of a non-leaf block clipped to its extended extent,
// vertical first.
inline std::vector<LineSeg> cross_lines(const Tree& t, BlockId b) {
  auto [vx, hy] = t.cross(b);
  NodeRect e = t.extended_rect(b);
  return {{'v', vx, e.y0, e.y1}, {'h', hy, e.x0, e.x1}};
}

// Skeleton of a block: every strict ancestor's cross lines clipped to the
// block's closed extended extent. Canonical order: vertical segments by
// ascending x, then horizontal segments by ascending y.
inline std::vector<LineSeg> skeleton_lines(const Tree& t, BlockId b) {
  NodeRect e = t.extended_rect(b);
  std::vector<LineSeg> vs, hs;
  BlockId a = b;
  while (a.level < t.n_levels) {
    a = t.parent(a);
    auto [vx, hy] = t.cross(a);
    if (e.x0 <= vx && vx <= e.x1) vs.push_back({'v', vx, e.y0, e.y1});
    if (e.y0 <= hy && hy <= e.y1) hs.push_back({'h', hy, e.x0, e.x1});
  }
  auto by_coord = [](const LineSeg& p, const LineSeg& q) { return p.coord < q.coord; };
  std::sort(vs.begin(), vs.end(), by_coord);
  std::sort(hs.begin(), hs.end(), by_coord);
  vs.insert(vs.end(), hs.begin(), hs.end());
  return vs;
}

inline NodeSet skeleton_nodes(const Tree& t, BlockId b) {
  return nodes_of_lines(skeleton_lines(t, b));
}

// One transfer channel of a non-leaf block: a cross line plus a sweep
// direction. Senders are the children behind the line; the emitted rows
// land either with a fixed sibling (horizontal channels, per half) or are
// split along the line by the perpendicular cross coordinate (vertical
// channels, shared by both row pairs).
struct ChannelSpec {
  char axis = 'v';
  int line = 0;
  int side = +1;     // strip occupies [line, line + side*margin]
  int span0 = 0, span1 = 0;
  std::vector<std::pair<int, int>> senders;  // child (ci, cj) indices
  bool owner_split = false;
  int split_coord = 0;                 // tangential tie point when owner_split
  std::pair<int, int> recv_low{0, 0};  // receiver for tangential coord <= split
  std::pair<int, int> recv_high{0, 0};
};

// The six channels of one parent, canonical order: vertical +x, vertical
// -x, then the horizontal pair of the left half, then of the right half.
// The x-split is outermost: vertical channels span the parent's full
// tangential extent and split arrivals at the horizontal cross; horizontal
// channels act per half with the half's own tangential extent. A
// diagonal_exchange request adds nothing: corner coupling rides the
// vertical channels' split rows.
inline std::vector<ChannelSpec> sibling_routing(const Tree& t, BlockId b,
                                                bool /*diagonal_exchange*/ = false) {
  auto [vx, hy] = t.cross(b);
  NodeRect e = t.extended_rect(b);
  int m = t.margin;
  std::vector<ChannelSpec> ch(6);
  ch[0] = {'v', vx, +1, e.y0, e.y1, {{0, 0}, {0, 1}}, true, hy, {1, 0}, {1, 1}};
  ch[1] = {'v', vx, -1, e.y0, e.y1, {{1, 0}, {1, 1}}, true, hy, {0, 0}, {0, 1}};
  ch[2] = {'h', hy, +1, e.x0, vx + m, {{0, 0}}, false, 0, {0, 1}, {0, 1}};
  ch[3] = {'h', hy, -1, e.x0, vx + m, {{0, 1}}, false, 0, {0, 0}, {0, 0}};
  ch[4] = {'h', hy, +1, vx - m, e.x1, {{1, 0}}, false, 0, {1, 1}, {1, 1}};
  ch[5] = {'h', hy, -1, vx - m, e.x1, {{1, 1}}, false, 0, {1, 0}, {1, 0}};
  return ch;
}

inline std::pair<int, int> channel_receiver(const ChannelSpec& c, int gx, int gy) {
  if (!c.owner_split) return c.recv_low;
  int tang = (c.axis == 'v') ? gy : gx;
  return tang <= c.split_coord ? c.recv_low : c.recv_high;
}

}  // namespace helmprop
