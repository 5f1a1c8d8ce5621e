#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ragshield::cli {

/// Process exit codes. Stable across releases.
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,          // unexpected internal error, output write failure
    kInputError = 2,       // bad flags, unreadable or malformed input
    kValidationError = 3,  // input or configuration violates an invariant
    kServiceError = 4,     // embedding service unreachable or misbehaving
};

/// Runs the command line `args` (without the program name). Data goes to
/// `out` when the output path is "-", diagnostics always go to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace ragshield::cli
