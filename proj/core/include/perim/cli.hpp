#pragma once

namespace perim {

/// Scenario-runner entry point (subcommands: run, compare, sweep, calibrate).
/// Returns 0 on success, 2 on configuration errors, 3 on solver failures,
/// 4 when only part of a multi-run command produced output.
int run_cli(int argc, const char* const* argv);

} // namespace perim
