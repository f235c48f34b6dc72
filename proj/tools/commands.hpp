#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace exid::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kFailure = 2 };

/// Parses `key = value` lines ('#' comments, blank lines ignored). Throws ParseError with the line.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Runs the command line and maps errors to exit codes:
/// 0 success, 1 usage or input error, 2 verification or training failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace exid::cli
