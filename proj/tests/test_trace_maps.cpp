#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "helmprop/model_gen.hpp"
#include "helmprop/solver.hpp"
#include "helmprop/trace_engine.hpp"

using namespace helmprop;

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
const double kH = 10.0;
const double kOmega = kTwoPi / (10.0 * kH) * 1500.0;

double max_abs_diff(const TraceMap& a, const TraceMap& b) {
  REQUIRE(a.rows == b.rows);
  REQUIRE(a.cols == b.cols);
  double mx = 0;
  for (size_t q = 0; q < a.a.size(); ++q) mx = std::max(mx, std::abs(a.a[q] - b.a[q]));
  return mx;
}

}  // namespace

TEST_CASE("injection nodes are deduplicated, ordered, strictly interior") {
  PmlProfile prof{5, 1, 4.0, 1.0};
  Tree t = Tree::build(1, 16, prof.margin(), 32, 32);
  BlockId b{0, 0, 0};  // extent [0, 28]^2
  NodeSet inj = injection_nodes(t, b, skeleton_lines(t, b));

  REQUIRE(inj.size() > 0);
  NodeRect ext = t.extended_rect(b);
  auto prev = inj.nodes.front();
  for (size_t q = 0; q < inj.nodes.size(); ++q) {
    auto [x, y] = inj.nodes[q];
    CHECK(ext.strictly_inside(x, y));
    // within margin of one of the two skeleton lines (both at coord 22)
    CHECK((std::abs(x - 22) <= 6 || std::abs(y - 22) <= 6));
    if (q > 0) CHECK(inj.nodes[q] > prev);  // strict (x,y) order, no repeats
    prev = inj.nodes[q];
  }
}

TEST_CASE("a leaf map reproduces its solve on the skeleton") {
  VelocityModel m = gen_three_layer(64, 64, 2000.0, 1500.0, kH, kH);
  PmlProfile prof{8, 0, 4.0, kOmega / m.c_max()};
  Tree t = Tree::build(2, 16, prof.margin(), 64, 64);
  BlockId b{0, 1, 2};
  TraceMap M = build_map_level0(t, b, m, kOmega, prof);
  NodeSet inj = injection_nodes(t, b, skeleton_lines(t, b));
  NodeSet skel = skeleton_nodes(t, b);
  NodeRect ext = t.extended_rect(b);

  RectOperator op = make_block_operator(ext, m, kOmega, prof, t.margin);
  BandFactor fac = factorize_band(op.assemble_band());

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<cd> injv(size_t(M.cols), cd(0, 0));
  std::vector<cd> rhs(size_t(op.n_unknowns()), cd(0, 0));
  for (int q = 0; q < M.cols; q += 5) {
    auto [x, y] = inj.nodes[size_t(q)];
    cd v(d(rng), d(rng));
    injv[size_t(q)] = v;
    rhs[op.index(x, y)] += v;
  }
  fac.solve_inplace(rhs.data());

  auto tr = M.apply(injv);
  double n = 0, den = 0;
  for (int r = 0; r < M.rows; ++r) {
    auto [x, y] = skel.nodes[size_t(r)];
    cd want = ext.strictly_inside(x, y) ? rhs[op.index(x, y)] : cd(0, 0);
    n += std::norm(tr[size_t(r)] - want);
    den += std::norm(want);
  }
  CHECK(std::sqrt(n / den) < 1e-13);
}

TEST_CASE("map construction is deterministic across worker counts") {
  VelocityModel m = gen_lens(32, 32, 1500.0, 0.3, kH, kH);
  PmlProfile prof{8, 0, 4.0, kOmega / m.c_max()};
  Tree t = Tree::build(1, 16, prof.margin(), 32, 32);
  TraceMap m1 = build_map_level0(t, {0, 1, 0}, m, kOmega, prof, 1);
  TraceMap m3 = build_map_level0(t, {0, 1, 0}, m, kOmega, prof, 3);
  REQUIRE(m1.a.size() == m3.a.size());
  for (size_t q = 0; q < m1.a.size(); ++q) CHECK(m1.a[q] == m3.a[q]);
}

TEST_CASE("parent map from children matches the merged direct map") {
  VelocityModel m = gen_three_layer(32, 32, 2000.0, 1500.0, kH, kH);
  PmlProfile prof{8, 0, 4.0, kOmega / m.c_max()};
  Tree t = Tree::build(1, 16, prof.margin(), 32, 32);
  BlockId root = t.root();

  std::vector<TraceMap> kids;
  for (int ci = 0; ci < 2; ++ci)
    for (int cj = 0; cj < 2; ++cj)
      kids.push_back(build_map_level0(t, t.child(root, ci, cj), m, kOmega, prof));
  std::array<const TraceMap*, 4> charts{&kids[0], &kids[1], &kids[2], &kids[3]};

  NodeSet rowset = nodes_of_lines(cross_lines(t, root));
  NodeSet colset = injection_nodes(t, root, cross_lines(t, root));
  TraceMap fused =
      build_map_from_children(t, root, charts, m, kOmega, prof, rowset, colset, 1e-9);

  RectOperator op = make_block_operator(t.extended_rect(root), m, kOmega, prof, t.margin);
  BandFactor fac = factorize_band(op.assemble_band());
  TraceMap direct = build_map_direct(root, op, fac, rowset, colset);

  CHECK(max_abs_diff(fused, direct) < 1e-7);
}

TEST_CASE("assembly from children is worker-invariant") {
  VelocityModel m = gen_constant(32, 32, 1500.0, kH, kH);
  PmlProfile prof{8, 0, 4.0, kOmega / m.c_max()};
  Tree t = Tree::build(1, 16, prof.margin(), 32, 32);
  BlockId root = t.root();

  std::vector<TraceMap> kids;
  for (int ci = 0; ci < 2; ++ci)
    for (int cj = 0; cj < 2; ++cj)
      kids.push_back(build_map_level0(t, t.child(root, ci, cj), m, kOmega, prof));
  std::array<const TraceMap*, 4> charts{&kids[0], &kids[1], &kids[2], &kids[3]};

  NodeSet rowset = nodes_of_lines(cross_lines(t, root));
  NodeSet colset = injection_nodes(t, root, cross_lines(t, root));
  TraceMap w1 = build_map_from_children(t, root, charts, m, kOmega, prof, rowset,
                                        colset, 1e-6, 200, 1);
  TraceMap w4 = build_map_from_children(t, root, charts, m, kOmega, prof, rowset,
                                        colset, 1e-6, 200, 4);
  for (size_t q = 0; q < w1.a.size(); ++q) CHECK(w1.a[q] == w4.a[q]);
}

TEST_CASE("map apply is additive over injections") {
  VelocityModel m = gen_constant(32, 32, 1500.0, kH, kH);
  PmlProfile prof{8, 0, 4.0, kOmega / m.c_max()};
  Tree t = Tree::build(1, 16, prof.margin(), 32, 32);
  TraceMap M = build_map_level0(t, {0, 0, 1}, m, kOmega, prof);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<cd> a(size_t(M.cols)), b(size_t(M.cols)), s(size_t(M.cols));
  for (int q = 0; q < M.cols; ++q) {
    a[size_t(q)] = cd(d(rng), d(rng));
    b[size_t(q)] = cd(d(rng), d(rng));
    s[size_t(q)] = a[size_t(q)] + b[size_t(q)];
  }
  auto ta = M.apply(a), tb = M.apply(b), ts = M.apply(s);
  double n = 0, den = 0;
  for (int r = 0; r < M.rows; ++r) {
    n += std::norm(ts[size_t(r)] - ta[size_t(r)] - tb[size_t(r)]);
    den += std::norm(ts[size_t(r)]);
  }
  CHECK(std::sqrt(n / den) < 1e-13);
  CHECK_THROWS_AS(M.apply(std::vector<cd>(size_t(M.cols + 1))), dimension_error);
}

TEST_CASE("maps cache and reload through TMAP files") {
  VelocityModel m = gen_constant(32, 32, 1500.0, kH, kH);
  PmlProfile prof{8, 0, 4.0, kOmega / m.c_max()};
  Tree t = Tree::build(1, 16, prof.margin(), 32, 32);
  BlockId b{0, 1, 1};
  TraceMap M = build_map_level0(t, b, m, kOmega, prof);

  auto dir = std::filesystem::temp_directory_path().string();
  uint64_t key = map_cache_key(m, kOmega, prof, 1, 16, b);
  std::string path = map_cache_path(dir, key);
  store_map(path, M);

  TraceMap R;
  REQUIRE(try_load_map(path, b, M.rows, M.cols, R));
  for (size_t q = 0; q < M.a.size(); ++q) CHECK(R.a[q] == M.a[q]);

  // dimension or identity mismatch refuses the cached file
  TraceMap junk;
  CHECK_FALSE(try_load_map(path, b, M.rows + 1, M.cols, junk));
  CHECK_FALSE(try_load_map(path, BlockId{0, 0, 1}, M.rows, M.cols, junk));
  CHECK_FALSE(try_load_map(dir + "/definitely-missing.tmap", b, M.rows, M.cols, junk));

  // a different block or frequency produces a different key
  CHECK(map_cache_key(m, kOmega, prof, 1, 16, BlockId{0, 0, 1}) != key);
  CHECK(map_cache_key(m, kOmega * 1.01, prof, 1, 16, b) != key);
  std::remove(path.c_str());
}

TEST_CASE("mid-level parent map from leaf maps matches its direct map") {
  // A non-root parent keeps ancestor lines in its skeleton, so its map has
  // skeleton rows and skeleton-line injection columns; build it both ways.
  VelocityModel m = gen_three_layer(64, 64, 2000.0, 1500.0, kH, kH);
  PmlProfile prof{8, 0, 4.0, kOmega / m.c_max()};
  Tree t = Tree::build(2, 16, prof.margin(), 64, 64);
  BlockId b{1, 0, 0};

  std::vector<TraceMap> kids;
  for (int ci = 0; ci < 2; ++ci)
    for (int cj = 0; cj < 2; ++cj)
      kids.push_back(build_map_level0(t, t.child(b, ci, cj), m, kOmega, prof));
  std::array<const TraceMap*, 4> charts{&kids[0], &kids[1], &kids[2], &kids[3]};

  NodeSet rowset = skeleton_nodes(t, b);
  NodeSet colset = injection_nodes(t, b, skeleton_lines(t, b));
  TraceMap fused =
      build_map_from_children(t, b, charts, m, kOmega, prof, rowset, colset, 1e-9);

  NodeRect ext = t.extended_rect(b);
  RectOperator op = make_block_operator(ext, m, kOmega, prof, t.margin);
  BandFactor fac = factorize_band(op.assemble_band());
  TraceMap direct = build_map_direct(b, op, fac, rowset, colset);

  CHECK(max_abs_diff(fused, direct) < 1e-6);
}
