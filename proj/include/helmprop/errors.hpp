#pragma once

#include <stdexcept>
#include <string>

namespace helmprop {

// Exit codes used by the CLI; library code throws, main() maps.
enum exit_code : int {
  exit_ok = 0,
  exit_usage = 64,
  exit_config = 65,
  exit_io = 66,
  exit_solver = 70,
  exit_stagnation = 71,
  exit_validation = 75,
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct dimension_error : std::logic_error {
  using std::logic_error::logic_error;
};

// Numerically singular pivot or corrupt assembly input.
struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trace iteration failed to contract; carries level/block context.
struct stagnation_error : std::runtime_error {
  int level;
  int bi, bj;
  stagnation_error(const std::string& msg, int level_, int bi_, int bj_)
      : std::runtime_error(msg), level(level_), bi(bi_), bj(bj_) {}
};

}  // namespace helmprop
