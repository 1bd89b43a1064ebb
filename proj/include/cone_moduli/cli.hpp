#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cone_moduli::cli {

/// Runs the command-line front end.  Exit codes: 0 success, 2 input or
/// usage error, 3 degeneration, 4 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace cone_moduli::cli
