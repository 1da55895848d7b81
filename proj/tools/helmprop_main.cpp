// Batch front end: configuration, model generation, solver runs,
// self-judging validation suites, benchmarks, and plot-data export.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "helmprop/helmprop.hpp"

namespace hp = helmprop;
using hp::cd;

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

// Accumulates `key = value` lines, echoed to stdout and optionally saved.
struct Report {
  std::vector<std::string> lines;

  void add(const std::string& key, const std::string& val) {
    lines.push_back(key + " = " + val);
    std::cout << lines.back() << "\n";
  }
  void add(const std::string& key, double val) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", val);
    add(key, std::string(buf));
  }
  void add(const std::string& key, long val) { add(key, std::to_string(val)); }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw hp::io_error("cannot write report: " + path);
    for (const auto& l : lines) f << l << "\n";
  }
};

std::vector<hp::TransferRow> build_source(const hp::RunConfig& cfg,
                                          const hp::VelocityModel& model, int margin) {
  std::vector<hp::TransferRow> f;
  if (cfg.source_node) {
    auto [i, j] = *cfg.source_node;
    if (i < 0 || i > model.grid.nx || j < 0 || j > model.grid.ny)
      throw hp::config_error("source_node outside the model grid");
    f.push_back({i + margin, j + margin,
                 cd(1.0 / (model.grid.hx * model.grid.hy), 0.0)});
  } else {
    hp::Field2 rhs = hp::read_fld2(*cfg.source_file);
    if (rhs.nx != model.grid.nx + 1 || rhs.ny != model.grid.ny + 1)
      throw hp::config_error("source grid does not match the model grid");
    for (int j = 0; j < rhs.ny; ++j)
      for (int i = 0; i < rhs.nx; ++i)
        if (rhs.at(i, j) != cd(0, 0)) f.push_back({i + margin, j + margin, rhs.at(i, j)});
  }
  return f;
}

hp::Field2 interior_field(const hp::FieldPatch& u, const hp::VelocityModel& model,
                          int margin) {
  hp::Field2 out;
  out.nx = model.grid.nx + 1;
  out.ny = model.grid.ny + 1;
  out.hx = model.grid.hx;
  out.hy = model.grid.hy;
  out.u.resize(size_t(out.nx) * out.ny);
  for (int j = 0; j < out.ny; ++j)
    for (int i = 0; i < out.nx; ++i) out.at(i, j) = u.at(i + margin, j + margin);
  return out;
}

void warn_diagonal(const hp::RunConfig& cfg) {
  if (cfg.diagonal_exchange)
    std::cerr << "note: diagonal_exchange has no effect; corner coupling rides the "
                 "joint vertical channels\n";
}

int cmd_solve(const hp::RunConfig& cfg, const std::string& out_dir) {
  warn_diagonal(cfg);
  hp::VelocityModel model = hp::read_velm(cfg.model);
  hp::PmlProfile prof{cfg.w_pml, cfg.t_nonabs, cfg.sigma0, cfg.omega / model.c_max()};

  hp::HierSolver solver(model, cfg.omega, prof, cfg.n_levels, cfg.block_cells);
  solver.tol_trace = cfg.tol_trace;
  solver.workers = cfg.workers;

  auto f = build_source(cfg, model, prof.margin());
  auto t0 = std::chrono::steady_clock::now();
  hp::SolveResult res = solver.solve(f);
  double solve_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Report rep;
  rep.add("grid_cells_x", long(model.grid.nx));
  rep.add("grid_cells_y", long(model.grid.ny));
  rep.add("omega", cfg.omega);
  rep.add("residual", res.residual);
  rep.add("solve_seconds", solve_s);
  for (const auto& lt : solver.setup_log)
    rep.add("setup_seconds_level_" + std::to_string(lt.level), lt.seconds);
  for (size_t l = 1; l < res.sweeps_by_level.size(); ++l)
    rep.add("sweeps_level_" + std::to_string(l), res.sweeps_by_level[l]);

  std::string field_path = cfg.out_field;
  std::string report_path = cfg.out_report;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    if (field_path.empty()) field_path = out_dir + "/field.fld2";
    if (report_path.empty()) report_path = out_dir + "/report.txt";
  }
  if (!field_path.empty())
    hp::write_fld2(field_path, interior_field(res.u, model, prof.margin()));
  if (!report_path.empty()) rep.save(report_path);

  if (res.residual > cfg.tol_residual) {
    std::cout << "FAIL residual " << res.residual << " > " << cfg.tol_residual << "\n";
    return hp::exit_solver;
  }
  return hp::exit_ok;
}

// ---- validation suites -----------------------------------------------
// Each case is self-judging: it prints measured vs threshold and PASS or
// FAIL, and the command exits nonzero if anything failed.

struct Judge {
  bool ok = true;
  void check(const std::string& name, double measured, double threshold) {
    bool pass = measured <= threshold;
    ok = ok && pass;
    std::printf("%-38s %12.4e  (threshold %.1e)  %s\n", name.c_str(), measured,
                threshold, pass ? "PASS" : "FAIL");
  }
};

double rel_l2_interior(const hp::FieldPatch& a, const hp::FieldPatch& b, int margin,
                       int nx, int ny) {
  double n = 0, d = 0;
  for (int j = margin; j <= margin + ny; ++j)
    for (int i = margin; i <= margin + nx; ++i) {
      n += std::norm(a.at(i, j) - b.at(i, j));
      d += std::norm(b.at(i, j));
    }
  return std::sqrt(n / d);
}

int validate_green(const hp::RunConfig* cfg) {
  const double h = 10.0, ppw = 10.0, c0 = 1500.0;
  const double omega = kTwoPi / (ppw * h) * c0;
  const int n = 256;
  hp::VelocityModel model = hp::gen_constant(n, n, c0, h, h);
  hp::PmlProfile prof{cfg ? cfg->w_pml : 8, cfg ? cfg->t_nonabs : 0,
                      cfg ? cfg->sigma0 : 4.0, omega / c0};
  const int m = prof.margin(), ic = m + n / 2, jc = m + n / 2;

  auto t0 = std::chrono::steady_clock::now();
  hp::FieldPatch u =
      hp::direct_solve(model, omega, prof, {{ic, jc, cd(1.0 / (h * h), 0)}});
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const double k = omega / c0;
  const double r_lo = 5.0 * h, r_hi = (n / 2.0 - prof.w_pml) * h;
  double se = 0, sg = 0;
  for (int j = m; j <= m + n; ++j)
    for (int i = m; i <= m + n; ++i) {
      double r = std::hypot((i - ic) * h, (j - jc) * h);
      if (r < r_lo || r > r_hi) continue;
      cd g = -hp::analytic_green(k, r);
      se += std::norm(u.at(i, j) - g);
      sg += std::norm(g);
    }

  Judge jd;
  jd.check("green annulus rms relative error", std::sqrt(se / sg), 0.05);
  jd.check("green solve seconds", secs, 30.0);
  return jd.ok ? hp::exit_ok : hp::exit_validation;
}

int validate_twosub(const hp::RunConfig* cfg) {
  const double h = 10.0, c0 = 1500.0;
  const double omega = kTwoPi / (10.0 * h) * c0;
  const double tol = cfg ? cfg->tol_trace : 1e-8;
  Judge jd;
  for (int layered = 0; layered < 2; ++layered) {
    hp::VelocityModel model = layered
                                  ? hp::gen_three_layer(64, 64, 2000.0, 1500.0, h, h)
                                  : hp::gen_constant(64, 64, c0, h, h);
    hp::PmlProfile prof{cfg ? cfg->w_pml : 8, cfg ? cfg->t_nonabs : 0,
                        cfg ? cfg->sigma0 : 4.0, omega / model.c_max()};
    std::vector<hp::TransferRow> f{{40, 28, cd(1.0 / (h * h), 0)}};
    hp::FieldPatch ref = hp::direct_solve(model, omega, prof, f);
    auto r = hp::two_subdomain_solve(model, omega, prof, f, tol);
    std::string tag = layered ? "three-layer" : "constant";
    jd.check("twosub " + tag + " rel l2 vs direct",
             rel_l2_interior(r.u, ref, prof.margin(), 64, 64), 1e-6);
    double rho = std::pow(r.history.back() / r.history.front(),
                          1.0 / double(r.history.size() - 1));
    jd.check("twosub " + tag + " contraction factor", rho, 1.0 - 1e-12);
    std::printf("  sweeps %zu, fitted contraction %.3f\n", r.history.size() - 1, rho);
  }
  return jd.ok ? hp::exit_ok : hp::exit_validation;
}

int validate_mapcheck(const hp::RunConfig* cfg) {
  const double h = 10.0;
  const double omega = kTwoPi / (10.0 * h) * 1500.0;
  hp::VelocityModel model = hp::gen_three_layer(64, 64, 2000.0, 1500.0, h, h);
  hp::PmlProfile prof{cfg ? cfg->w_pml : 8, cfg ? cfg->t_nonabs : 0,
                      cfg ? cfg->sigma0 : 4.0, omega / model.c_max()};
  int workers = cfg ? cfg->workers : 1;

  hp::Tree t = hp::Tree::build(1, 32, prof.margin(), 64, 64);
  hp::BlockId root = t.root();
  const char* cache_env = std::getenv("HELMPROP_CACHE_DIR");
  std::string cache_dir = cache_env ? cache_env : "";
  std::vector<hp::TraceMap> kids;
  kids.reserve(4);
  for (int ci = 0; ci < 2; ++ci)
    for (int cj = 0; cj < 2; ++cj) {
      hp::BlockId b = t.child(root, ci, cj);
      hp::TraceMap mb;
      std::string cpath;
      if (!cache_dir.empty()) {
        uint64_t key = hp::map_cache_key(model, omega, prof, 1, 32, b);
        cpath = hp::map_cache_path(cache_dir, key);
        int rows = hp::skeleton_nodes(t, b).size();
        int cols = hp::injection_nodes(t, b, hp::skeleton_lines(t, b)).size();
        if (hp::try_load_map(cpath, b, rows, cols, mb)) {
          kids.push_back(std::move(mb));
          continue;
        }
      }
      mb = hp::build_map_level0(t, b, model, omega, prof, workers);
      if (!cpath.empty()) hp::store_map(cpath, mb);
      kids.push_back(std::move(mb));
    }
  std::array<const hp::TraceMap*, 4> charts{&kids[0], &kids[1], &kids[2], &kids[3]};

  hp::NodeSet rowset = hp::nodes_of_lines(hp::cross_lines(t, root));
  hp::NodeSet colset = hp::injection_nodes(t, root, hp::cross_lines(t, root));
  hp::TraceMap from_children = hp::build_map_from_children(
      t, root, charts, model, omega, prof, rowset, colset, 1e-9, 200, workers);

  hp::NodeRect ext = t.extended_rect(root);
  hp::RectOperator op = hp::make_block_operator(ext, model, omega, prof, t.margin);
  hp::BandFactor fac = hp::factorize_band(op.assemble_band());
  hp::TraceMap direct = hp::build_map_direct(root, op, fac, rowset, colset, workers);

  double mx = 0;
  for (size_t q = 0; q < direct.a.size(); ++q)
    mx = std::max(mx, std::abs(from_children.a[q] - direct.a[q]));

  Judge jd;
  jd.check("mapcheck max elementwise difference", mx, 1e-6);
  return jd.ok ? hp::exit_ok : hp::exit_validation;
}

int validate_pipeline(const hp::RunConfig* cfg) {
  const double h = 10.0;
  const double omega = kTwoPi / (10.0 * h) * 1500.0;
  const double tol = cfg ? cfg->tol_trace : 1e-7;
  int workers = cfg ? cfg->workers : 1;

  Judge jd;
  for (const char* name : {"constant", "three-layer", "lens"}) {
    hp::VelocityModel model = hp::gen_model(name, 128, 128, h, h);
    hp::PmlProfile prof{cfg ? cfg->w_pml : 8, cfg ? cfg->t_nonabs : 0,
                        cfg ? cfg->sigma0 : 4.0, omega / model.c_max()};
    std::vector<hp::TransferRow> f{
        {prof.margin() + 20, prof.margin() + 20, cd(1.0 / (h * h), 0)}};

    hp::HierSolver solver(model, omega, prof, 2, 32);
    solver.tol_trace = tol;
    solver.workers = workers;
    hp::SolveResult res = solver.solve(f);
    hp::FieldPatch ref = hp::direct_solve(model, omega, prof, f);

    jd.check(std::string("pipeline ") + name + " residual", res.residual, 1e-5);
    jd.check(std::string("pipeline ") + name + " rel l2 vs direct",
             rel_l2_interior(res.u, ref, prof.margin(), 128, 128), 1e-5);
  }
  return jd.ok ? hp::exit_ok : hp::exit_validation;
}

int cmd_bench(const hp::RunConfig* cfg) {
  const double h = 10.0;
  const double omega = kTwoPi / (10.0 * h) * 1500.0;
  int workers = cfg ? cfg->workers : 1;
  Report rep;

  std::vector<double> logn, logt;
  for (int n : {64, 128, 256}) {
    int n_levels = 0;
    while ((32 << n_levels) < n) ++n_levels;
    hp::VelocityModel model = hp::gen_three_layer(n, n, 2000.0, 1500.0, h, h);
    hp::PmlProfile prof{8, 0, 4.0, omega / model.c_max()};

    auto t0 = std::chrono::steady_clock::now();
    hp::HierSolver solver(model, omega, prof, n_levels, 32);
    double setup_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    solver.workers = workers;

    std::vector<hp::TransferRow> f{
        {prof.margin() + n / 4, prof.margin() + n / 4, cd(1.0 / (h * h), 0)}};
    t0 = std::chrono::steady_clock::now();
    hp::SolveResult res = solver.solve(f);
    double solve_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::string tag = "n" + std::to_string(n);
    rep.add(tag + "_setup_seconds", setup_s);
    rep.add(tag + "_solve_seconds", solve_s);
    rep.add(tag + "_residual", res.residual);
    for (const auto& lt : solver.setup_log)
      rep.add(tag + "_setup_level_" + std::to_string(lt.level), lt.seconds);

    double unknowns = double(n + 2 * prof.margin() - 1);
    unknowns *= unknowns;
    logn.push_back(std::log(unknowns));
    logt.push_back(std::log(std::max(setup_s, 1e-9)));
  }

  // least-squares slope of log t vs log N
  double mx = 0, my = 0;
  for (size_t q = 0; q < logn.size(); ++q) mx += logn[q], my += logt[q];
  mx /= double(logn.size());
  my /= double(logn.size());
  double num = 0, den = 0;
  for (size_t q = 0; q < logn.size(); ++q) {
    num += (logn[q] - mx) * (logt[q] - my);
    den += (logn[q] - mx) * (logn[q] - mx);
  }
  rep.add("setup_scaling_exponent", num / den);
  rep.add("setup_scaling_target", 1.5);
  return hp::exit_ok;
}

int cmd_gen_model(const std::string& name, int nx, int ny, double spacing,
                  const std::string& out) {
  hp::VelocityModel m = hp::gen_model(name, nx, ny, spacing, spacing);
  hp::write_velm(out, m);
  std::cout << "wrote " << out << " (" << nx << "x" << ny << " cells, " << name << ")\n";
  return hp::exit_ok;
}

int cmd_export_slice(const std::string& field_path, const std::string& axis, int index,
                     const std::string& out) {
  hp::Field2 f = hp::read_fld2(field_path);
  bool along_x = (axis == "x");
  if (!along_x && axis != "y") throw hp::config_error("axis must be x or y");
  int extent = along_x ? f.nx : f.ny;
  int range = along_x ? f.ny : f.nx;
  if (index < 0 || index >= range) throw hp::config_error("slice index out of range");

  std::ofstream o(out);
  if (!o) throw hp::io_error("cannot write slice: " + out);
  o << "coord,re,im,abs\n";
  o.precision(17);
  for (int q = 0; q < extent; ++q) {
    cd v = along_x ? f.at(q, index) : f.at(index, q);
    double coord = q * (along_x ? f.hx : f.hy);
    o << coord << ',' << v.real() << ',' << v.imag() << ',' << std::abs(v) << "\n";
  }
  std::cout << "wrote " << out << " (" << extent << " rows)\n";
  return hp::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical source-transfer Helmholtz solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers_flag = 0;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* o = sub->add_option("--config", config_path, "run configuration file");
    if (need_config) o->required();
    sub->add_option("--workers", workers_flag, "worker threads (overrides config)");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* solve = app.add_subcommand("solve", "run the full pipeline");
  add_common(solve, true);

  auto* validate = app.add_subcommand("validate", "self-judging validation suites");
  std::string suite;
  validate->add_option("suite", suite, "green | twosub | mapcheck | pipeline")->required();
  add_common(validate, false);

  auto* bench = app.add_subcommand("bench", "setup/solve timings across grid sizes");
  add_common(bench, false);

  auto* gen = app.add_subcommand("gen-model", "write a synthetic velocity model");
  std::string gen_name = "constant", gen_out = "model.velm";
  int gen_nx = 128, gen_ny = 128;
  double gen_h = 10.0;
  gen->add_option("--name", gen_name, "constant | three-layer | lens");
  gen->add_option("--nx", gen_nx, "cells in x");
  gen->add_option("--ny", gen_ny, "cells in y");
  gen->add_option("--spacing", gen_h, "grid spacing (m)");
  gen->add_option("--out", gen_out, "output VELM path")->required();

  auto* slice = app.add_subcommand("export-slice", "dump one grid line of a field as CSV");
  std::string sl_field, sl_axis = "x", sl_out = "slice.csv";
  int sl_index = 0;
  slice->add_option("--field", sl_field, "FLD2 input")->required();
  slice->add_option("--axis", sl_axis, "x | y");
  slice->add_option("--index", sl_index, "grid line index")->required();
  slice->add_option("--out", sl_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : hp::exit_usage;
  }

  try {
    hp::RunConfig cfg;
    bool have_cfg = !config_path.empty();
    if (have_cfg) {
      cfg = hp::load_config(config_path);
      if (workers_flag > 0) cfg.workers = workers_flag;
    } else if (workers_flag > 0) {
      cfg.workers = workers_flag;
      have_cfg = true;  // carry the worker override into suites
    }

    if (solve->parsed()) return cmd_solve(cfg, out_dir);
    if (validate->parsed()) {
      const hp::RunConfig* c = have_cfg ? &cfg : nullptr;
      if (suite == "green") return validate_green(c);
      if (suite == "twosub") return validate_twosub(c);
      if (suite == "mapcheck") return validate_mapcheck(c);
      if (suite == "pipeline") return validate_pipeline(c);
      std::cerr << "unknown validate suite: " << suite << "\n";
      return hp::exit_usage;
    }
    if (bench->parsed()) return cmd_bench(have_cfg ? &cfg : nullptr);
    if (gen->parsed()) return cmd_gen_model(gen_name, gen_nx, gen_ny, gen_h, gen_out);
    if (slice->parsed()) return cmd_export_slice(sl_field, sl_axis, sl_index, sl_out);
  } catch (const hp::stagnation_error& e) {
    std::cerr << "stagnation: " << e.what() << " (level " << e.level << ", block "
              << e.bi << "," << e.bj << ")\n";
    return hp::exit_stagnation;
  } catch (const hp::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return hp::exit_config;
  } catch (const hp::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return hp::exit_io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hp::exit_solver;
  }
  return hp::exit_usage;
}
