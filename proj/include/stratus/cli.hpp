#pragma once

#include <ostream>

namespace stratus::cli {

// Exit codes: 0 success, 1 usage error, 2 analysis error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitAnalysis = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stratus::cli
