#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "meal/core.hpp"

namespace meal {

/// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_format = 2,
    exit_precondition = 3,
};

int exit_code_for(ErrorCode code);

/// Runs the command line `args` (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace meal
