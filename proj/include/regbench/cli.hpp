#pragma once

namespace regbench {

// Parses argv and dispatches to the run/sweep/retrieve/synth/report
// subcommands. Returns the process exit code: 0 success, 1 usage error,
// 2 runtime error.
int run_cli(int argc, const char* const* argv);

}  // namespace regbench
