#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlpolar::cli {

/// Runs one invocation (arguments without the program name). Returns the exit
/// code: 0 success, 1 input error, 2 numerical degeneracy.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// --out-dir if given, else $MLPOLAR_OUT_DIR, else ./out.
std::string resolve_out_dir(const std::string& flag_value);

}  // namespace mlpolar::cli
