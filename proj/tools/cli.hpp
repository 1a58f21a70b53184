#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ptl::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kData = 2,
    kNumerical = 3,
};

// Entry point shared by the `ptl` binary and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ptl::cli
