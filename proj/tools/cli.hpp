#ifndef ASAF_TOOLS_CLI_HPP_
#define ASAF_TOOLS_CLI_HPP_

#include <iosfwd>

namespace asaf::cli {

enum ExitCode {
  kOk = 0,
  kCheckFailed = 1,
  kUsage = 2,
  kValidation = 3,
  kIo = 4,
};

// Entry point of the `asaf` tool. Subcommands: gen-expert, train, eval, verify.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace asaf::cli

#endif  // ASAF_TOOLS_CLI_HPP_
