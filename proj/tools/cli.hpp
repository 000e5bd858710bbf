#pragma once

#include <ostream>

namespace cdpr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitFailure = 3;

inline constexpr unsigned long long kDefaultSeed = 42;

/// Entry point of the `cdpr` tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cdpr::cli
