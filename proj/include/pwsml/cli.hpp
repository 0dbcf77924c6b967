#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pwsml::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kIncompatible = 4,
  kParse = 5,
  kDiverged = 6,
};

/// Runs one subcommand. `args` excludes the program name. Errors are reported
/// on `err` as a single `error: code=<Code> message=<text>` line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Environment variable consulted for the default output directory.
inline constexpr const char* kOutDirEnv = "PWSML_OUT_DIR";

}  // namespace pwsml::cli
