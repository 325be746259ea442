#pragma once

#include <exception>
#include <string>
#include <vector>

namespace tmc::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kConfig = 2,
    kBudget = 3,
    kNonConvergence = 4,
    kTimeout = 5,
    kModel = 6,
    kPolicy = 7,
    kProperty = 8,
};

// Exit code for an exception escaping a subcommand.
int exit_code_for(const std::exception& e);

// Runs `tmarl-check` with args[0] as the program name; never throws.
int run(const std::vector<std::string>& args);

}  // namespace tmc::cli
