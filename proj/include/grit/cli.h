#ifndef GRIT_CLI_H_
#define GRIT_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace grit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one `grit` invocation; args excludes the program name. Reports go to
// `out`, diagnostics to `err`. Files named "-" are the standard streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grit::cli

#endif  // GRIT_CLI_H_
