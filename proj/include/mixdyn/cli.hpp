#pragma once

#include <iosfwd>
#include <string>

/// Command-line front end. Lives in the library so tests can drive it
/// without spawning processes.
namespace mixdyn::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitTolerance = 1;
inline constexpr int kExitInput = 2;

std::string version();

/// Runs `mixdyn <subcommand> ...`. Results go to `out` (or to --out files),
/// diagnostics to `err`. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mixdyn::cli
