#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace usmesh::cli {

/// Runs one command line (without the program name). Returns 0 on success,
/// 1 for bad flags or invalid input, 2 for runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace usmesh::cli
