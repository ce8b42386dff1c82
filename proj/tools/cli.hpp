#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace adaconv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // verification or convergence failure
inline constexpr int kExitDomain = 2;
inline constexpr int kExitUsage = 64;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace adaconv::cli
