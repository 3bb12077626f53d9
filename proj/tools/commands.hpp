#pragma once

#include <iosfwd>

namespace choquard::cli {

enum ExitCode : int
{
    exit_ok = 0,
    exit_io = 1,
    exit_usage = 2,
    exit_solver = 3,
    exit_verification = 4,
    exit_undetermined = 5,
};

/// Parses the command line, runs one subcommand and returns its exit code. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& err);

} // namespace choquard::cli
