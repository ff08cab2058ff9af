#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nesy::cli {

inline constexpr const char* kToolVersion = "0.3.0";

enum ExitCode : int {
    kOk = 0,
    kParseOrConfig = 2,
    kInvariant = 3,
    kDiverged = 4,
};

// Runs one command line (args exclude the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// FNV-1a over the file's bytes, as 16 lowercase hex digits.
std::string file_digest(const std::string& path);

} // namespace nesy::cli
