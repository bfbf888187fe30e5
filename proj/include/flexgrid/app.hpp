#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flexgrid::app {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitComputation = 3;

/// Runs the `flexgrid` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flexgrid::app
