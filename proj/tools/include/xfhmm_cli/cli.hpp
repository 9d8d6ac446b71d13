#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xfhmm::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Runs one command line (argv[0] is the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xfhmm::cli
