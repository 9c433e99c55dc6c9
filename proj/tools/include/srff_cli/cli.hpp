#pragma once

#include <iosfwd>

namespace srff::cli {

/// Runs the command line tool. Exit codes: 0 success, 1 invalid input or
/// arguments, 2 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace srff::cli
