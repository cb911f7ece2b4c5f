#ifndef TEAL_TOOLS_CLI_H_
#define TEAL_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace teal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

// Runs one subcommand. `args` excludes the program name. Tables go to `out`
// when no --out is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace teal::cli

#endif  // TEAL_TOOLS_CLI_H_
