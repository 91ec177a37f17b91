#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nsmi::cli {

enum ExitCode : int {
    kOk = 0,
    kGenericFailure = 1,
    kBadConfig = 2,
    kIoFailure = 3,
    kSolverFailure = 4,
    kDenoiserFailure = 5,
};

/// Entry point of the `nsmi` executable; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nsmi::cli
