#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace iondetect::cli {

/// Runs one command line; args[0] is the program name.
/// Returns 0 on success, 2 on invalid input, 1 on a runtime failure.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace iondetect::cli
