#pragma once

#include <iosfwd>

namespace elicit::cli {

/// Parses `argv` and runs one subcommand. Returns the process exit code:
/// 0 success, 1 validation error, 2 backend error, 3 internal error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace elicit::cli
