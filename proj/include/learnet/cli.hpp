#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace learnet::cli {

// Dispatches one invocation. Data goes to `out`, diagnostics to `err`.
// Exit codes: 0 success, 1 usage error, 2 runtime error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace learnet::cli
