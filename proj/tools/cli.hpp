#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace etc_cbir::tools {

/// Runs one `etc-cbir` invocation (args exclude the program name).
/// Returns 0 on success, 2 on usage errors and 1 on I/O or pipeline errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace etc_cbir::tools
