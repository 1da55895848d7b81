#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "errors.hpp"

namespace helmprop {

// Run parameters, populated from a line-oriented `key = value` file.
// Unknown keys are rejected so typos fail loudly instead of silently
// falling back to defaults.
struct RunConfig {
  std::string model;  // path to a VELM file
  double omega = 0.0;  // rad/s, set directly or via frequency (Hz)

  int n_levels = 0;
  int block_cells = 0;

  int w_pml = 8;
  int t_nonabs = 0;
  double sigma0 = 4.0;
  double tol_trace = 1e-8;
  double tol_residual = 1e-7;
  bool diagonal_exchange = false;
  int workers = 1;

  // exactly one source: a point load at a model node, or a gridded rhs file
  std::optional<std::pair<int, int>> source_node;
  std::optional<std::string> source_file;

  std::string out_field;   // optional FLD2 output
  std::string out_report;  // optional key = value run report

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_num(const std::string& v, int line) {
  size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw config_error("line " + std::to_string(line) + ": not a number: '" + v + "'");
  }
  if (pos != v.size())
    throw config_error("line " + std::to_string(line) + ": trailing junk in number: '" + v + "'");
  return x;
}

inline int parse_int(const std::string& v, int line) {
  double x = parse_num(v, line);
  int i = int(std::lround(x));
  if (double(i) != x)
    throw config_error("line " + std::to_string(line) + ": expected integer, got '" + v + "'");
  return i;
}

inline bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw config_error("line " + std::to_string(line) + ": expected boolean, got '" + v + "'");
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  RunConfig c;
  bool saw_model = false, saw_freq = false, saw_levels = false, saw_cells = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = detail::trim(raw);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(line) + ": expected 'key = value'");
    std::string key = detail::trim(s.substr(0, eq));
    std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty() || val.empty())
      throw config_error("line " + std::to_string(line) + ": empty key or value");

    if (key == "model") {
      c.model = val;
      saw_model = true;
    } else if (key == "omega" || key == "frequency") {
      if (saw_freq)
        throw config_error("line " + std::to_string(line) +
                           ": frequency already set; give omega or frequency once");
      double v = detail::parse_num(val, line);
      c.omega = (key == "omega") ? v : 2.0 * 3.14159265358979323846 * v;
      saw_freq = true;
    } else if (key == "n_levels") {
      c.n_levels = detail::parse_int(val, line);
      saw_levels = true;
    } else if (key == "block_cells") {
      c.block_cells = detail::parse_int(val, line);
      saw_cells = true;
    } else if (key == "w_pml") {
      c.w_pml = detail::parse_int(val, line);
    } else if (key == "t_nonabs") {
      c.t_nonabs = detail::parse_int(val, line);
    } else if (key == "sigma0") {
      c.sigma0 = detail::parse_num(val, line);
    } else if (key == "tol_trace") {
      c.tol_trace = detail::parse_num(val, line);
    } else if (key == "tol_residual") {
      c.tol_residual = detail::parse_num(val, line);
    } else if (key == "diagonal_exchange") {
      c.diagonal_exchange = detail::parse_bool(val, line);
    } else if (key == "workers") {
      c.workers = detail::parse_int(val, line);
    } else if (key == "source_node") {
      std::istringstream ss(val);
      int i, j;
      char comma = ',';
      if (!(ss >> i)) throw config_error("line " + std::to_string(line) + ": bad source_node");
      ss >> std::ws;
      if (ss.peek() == ',') ss >> comma;
      if (!(ss >> j)) throw config_error("line " + std::to_string(line) + ": bad source_node");
      c.source_node = {i, j};
    } else if (key == "source_file") {
      c.source_file = val;
    } else if (key == "out_field") {
      c.out_field = val;
    } else if (key == "out_report") {
      c.out_report = val;
    } else {
      throw config_error("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }

  if (!saw_model) throw config_error("missing required key 'model'");
  if (!saw_freq) throw config_error("missing required key 'frequency' (or 'omega')");
  if (!saw_levels) throw config_error("missing required key 'n_levels'");
  if (!saw_cells) throw config_error("missing required key 'block_cells'");

  if (!(c.omega > 0.0)) throw config_error("frequency must be positive");
  if (c.n_levels < 1) throw config_error("n_levels must be >= 1");
  if (c.block_cells < 2) throw config_error("block_cells must be >= 2");
  if (c.w_pml < 1) throw config_error("w_pml must be >= 1");
  if (c.t_nonabs < 0) throw config_error("t_nonabs must be >= 0");
  if (!(c.sigma0 > 0.0)) throw config_error("sigma0 must be positive");
  auto tol_ok = [](double t) { return t > 0.0 && t < 1.0; };
  if (!tol_ok(c.tol_trace)) throw config_error("tol_trace must lie in (0,1)");
  if (!tol_ok(c.tol_residual)) throw config_error("tol_residual must lie in (0,1)");
  if (c.workers < 1) throw config_error("workers must be >= 1");
  if (c.source_node.has_value() == c.source_file.has_value())
    throw config_error("exactly one of source_node / source_file is required");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open config: " + path);
  try {
    return parse_config(f);
  } catch (const config_error& e) {
    throw config_error(path + ": " + e.what());
  }
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "model = " << c.model << "\n";
  os << "omega = " << c.omega << "\n";
  os << "n_levels = " << c.n_levels << "\n";
  os << "block_cells = " << c.block_cells << "\n";
  os << "w_pml = " << c.w_pml << "\n";
  os << "t_nonabs = " << c.t_nonabs << "\n";
  os << "sigma0 = " << c.sigma0 << "\n";
  os << "tol_trace = " << c.tol_trace << "\n";
  os << "tol_residual = " << c.tol_residual << "\n";
  os << "diagonal_exchange = " << (c.diagonal_exchange ? "true" : "false") << "\n";
  os << "workers = " << c.workers << "\n";
  if (c.source_node)
    os << "source_node = " << c.source_node->first << ", " << c.source_node->second << "\n";
  if (c.source_file) os << "source_file = " << *c.source_file << "\n";
  if (!c.out_field.empty()) os << "out_field = " << c.out_field << "\n";
  if (!c.out_report.empty()) os << "out_report = " << c.out_report << "\n";
  return os.str();
}

}  // namespace helmprop
