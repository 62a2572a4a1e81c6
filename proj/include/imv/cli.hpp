#ifndef IMV_CLI_HPP
#define IMV_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace imv {

/// Entry point of the command-line tool; `args` excludes the program name.
/// Exit codes: 0 success, 2 usage/config/data error, 1 internal failure.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace imv

#endif  // IMV_CLI_HPP
