#ifndef DAMLN_CLI_H_
#define DAMLN_CLI_H_

#include <iosfwd>

namespace damln {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitResource = 3,
};

// Entry point of the `damln` tool. Subcommands: learn, infer, generate-fs,
// eval, experiment. Diagnostics go to `err`, help text to `out`.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace damln

#endif  // DAMLN_CLI_H_
