#pragma once

#include <ostream>

namespace longfuse::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitInput = 2, kExitRuntime = 3 };

/// Entry point of the `longfuse` tool: fuse, phantom, eval and experiment.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace longfuse::cli
