#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clockopt::cli {

enum ExitCode : int {
    kSuccess = 0,
    kFailure = 1,
    kValidation = 2,
    kIo = 3,
    kResumeConflict = 4,
};

/// Runs the command line `args` (without the program name). Results go to `out` unless an
/// --out path is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clockopt::cli
