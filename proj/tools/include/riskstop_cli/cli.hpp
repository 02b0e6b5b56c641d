#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "riskstop/types.hpp"

namespace riskstop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitBudget = 2;
inline constexpr int kExitCheckFailed = 3;
inline constexpr int kExitUsage = 64;

/// Test seams. `perturb_solution` rewrites the solver's value before
/// oracle-check compares it, to exercise the failure path.
struct RunHooks {
  std::function<void(ValueFunction&)> perturb_solution;
};

/// Runs one invocation; `args` excludes the program name. Results go to `out`,
/// diagnostics and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const RunHooks& hooks = {});

}  // namespace riskstop::cli
