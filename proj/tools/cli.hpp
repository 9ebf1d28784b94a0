#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace srm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 2,
  kNumericalError = 3,
};

/// Runs the `srm` command line in-process. Reports go to `out` unless --out
/// names a file; diagnostics and progress go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace srm::cli
