#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gmra::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

// Runs one subcommand; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gmra::cli
