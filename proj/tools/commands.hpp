#pragma once

#include "config.hpp"

#include <iosfwd>

namespace bessel::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Each command validates the config, runs, writes its JSON report (plus data
/// files) under config.outputs, logs one line per check to `log`, and returns
/// an exit code. Config problems throw ConfigError.
int cmd_kernel_check(const RunConfig& config, std::ostream& log);
int cmd_solve(const RunConfig& config, std::ostream& log);
int cmd_mc_validate(const RunConfig& config, std::ostream& log);
int cmd_properties(const RunConfig& config, std::ostream& log);

} // namespace bessel::cli
