#ifndef METASHAPE_TOOLS_CLI_H_
#define METASHAPE_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace metashape::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

// Runs one command line (args[0] is the program name). Data goes to files or
// `out`; diagnostics go to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace metashape::cli

#endif  // METASHAPE_TOOLS_CLI_H_
