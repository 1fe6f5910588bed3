#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scvm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitProcessing = 1;
inline constexpr int kExitUsage = 2;
/// Only with --fail-on-vulnerable.
inline constexpr int kExitVulnerable = 3;

/// Runs one command line (without the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace scvm::cli
