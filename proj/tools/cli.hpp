#pragma once

#include <iosfwd>

namespace wkw::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kRuntimeError = 4 };

// Parses argv, runs one subcommand and maps failures onto exit codes.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wkw::cli
