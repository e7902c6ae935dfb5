#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dfd::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;  // usage or configuration error
inline constexpr int kExitData = 2;   // input, integrity or numeric error

// Runs one command line (program name excluded). Results go to `out`,
// diagnostics and warnings to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dfd::cli
