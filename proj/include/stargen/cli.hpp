#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stargen/error.hpp"
#include "stargen/proposer.hpp"

namespace stargen {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitUsage = 2, kExitIo = 3 };

/// Exit code for an error: I/O, lock and transport failures map to 3,
/// unsupported axis/format to 2, everything else to 1.
int exit_code_for(ErrorCode code);

struct CliIo {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  EnvLookup env = process_env();
};

/// Runs one invocation; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, CliIo io);

}  // namespace stargen
