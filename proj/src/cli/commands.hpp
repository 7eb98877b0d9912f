#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace prioq::cli {

enum ExitCode : int {
    kOk = 0,
    kInvalidParams = 2,
    kUnstable = 3,
};

/// Entry point of the command-line tool. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prioq::cli
