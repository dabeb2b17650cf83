#pragma once

#include <ostream>

namespace amdyn {

/// Exit codes of the amdyn executable.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2 };

/// Parses argv, runs one subcommand and returns its exit code. Results go to `out` (or
/// to the --out file), diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace amdyn
