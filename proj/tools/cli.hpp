#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace feller::cli {

/// Runs the `feller-diag` command line. args[0] is the program name. Tables
/// go to --out when given, else to `out`; messages go to `err`. Returns 0
/// iff every cell succeeded, 1 when some cell failed, 2 on usage or
/// validation errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace feller::cli
