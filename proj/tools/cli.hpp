#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mtlflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Environment variable consulted when --config is absent.
inline constexpr const char* kConfigEnvVar = "MTLFLOW_CONFIG";

/// Runs one invocation; `args` excludes the program name. Returns the exit
/// code (0 success, 1 runtime failure, 2 usage error).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtlflow::cli
