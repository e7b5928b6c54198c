#pragma once

#include "run_config.hpp"

namespace basofr::cli {

enum ExitCode : int { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kNumerical = 4 };

void cmd_simulate(const RunConfig& config);
void cmd_fit(const RunConfig& config);
void cmd_summarize(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
/// Returns the number of replicates that failed in this invocation.
int cmd_replicate(const RunConfig& config);

/// Parses argv, dispatches, and maps exceptions to exit codes.
int run(int argc, char** argv);

}  // namespace basofr::cli
