#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace graspvae::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kPath = 3,
    kFormat = 4,
    kValidation = 5,
    kNumeric = 6,
};

/// Runs the command line `args` (args[0] is the program name). Human-readable
/// output goes to `out`; failures print one line
/// `error: kind=<kind> code=<n>: <message>` to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace graspvae::cli
