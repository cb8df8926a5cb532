#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mfd::cli {

// Exit codes: 0 success, 1 usage error, 2 runtime failure.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kFailure = 2;

// `args` excludes the program name. Resolved configuration goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfd::cli
