#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace srmap::cli {

// Exit statuses of the srmap tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvariant = 3;

/// Runs one srmap command line (arguments after the program name) and returns
/// its exit status. Progress goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// SHA-256 of a file as lowercase hex.
std::string file_digest(const std::string& path);

}  // namespace srmap::cli
