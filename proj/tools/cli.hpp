#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rkm::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kData = 3;
inline constexpr int kNumeric = 4;

/// Runs the tool; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rkm::cli
