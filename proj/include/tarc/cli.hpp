#pragma once

#include <iosfwd>

namespace tarc {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,     // bad arguments, unreadable or malformed scenario
  kExitCertify = 2,   // a stability condition failed or the grid was exhausted
  kExitDiverged = 3,  // simulation blew up; partial CSV written
};

/// Entry point of the `tarc` tool. Output directory precedence: --out, then
/// $TARC_OUT_DIR, then ./tarc_out.
int cli_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);

}  // namespace tarc
