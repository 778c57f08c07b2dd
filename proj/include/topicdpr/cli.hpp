#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace topicdpr::cli {

/// Runs one subcommand. `args` excludes the program name. Returns the
/// process exit status; errors go to `err` as a single line.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topicdpr::cli
