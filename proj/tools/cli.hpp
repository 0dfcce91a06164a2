#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace prh::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Runs the prh command line with args[0] as the program name. Returns the
/// process exit status: 0 on success, 2 on usage errors (nothing written),
/// 1 on runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prh::cli
