#pragma once

#include <ostream>

namespace sccovert::cli {

enum ExitCode : int {
  ok = 0,
  usage_error = 2,  // bad arguments, config or missing input
  no_convergence = 3,
  internal_error = 4,
};

// Entry point of the command-line tool; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sccovert::cli
