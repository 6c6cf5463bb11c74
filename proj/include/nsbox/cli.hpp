#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nsbox::cli {

/// Runs one command (args exclude the program name) and returns the exit
/// code: 0 success, 1 validation/verification failure, 2 usage or parse
/// error, 3 resource-cap refusal.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace nsbox::cli
