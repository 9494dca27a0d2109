#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hinfomax {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit statuses: 0 ok, 1 internal failure, 2 usage, 3 data, 4 numerical.
inline constexpr int kExitInternal = 1;

/// Parses a flat `key = value` config file; '#' starts a comment line.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to
/// `err` as a single line; progress and reports go to `out`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hinfomax
