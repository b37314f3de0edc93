#pragma once

#include <iosfwd>

namespace csskit::cli {

enum ExitCode : int { kOk = 0, kBadFlags = 2, kNumericalFailure = 3 };

/// Runs the command-line front end. Normal output goes to `out`, messages to
/// `err`; files named by flags are written directly.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace csskit::cli
