#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sqform {

// Exit codes shared by every subcommand.
enum ExitCode : int {
    kExitSuccess = 0,
    kExitNegative = 1,
    kExitInputError = 2,
    kExitBudget = 3,
};

// Runs one command line (without the program name). All output goes to
// `out` and `err`; nothing touches the process streams.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace sqform
