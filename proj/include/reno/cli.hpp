// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace reno::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericFailure = 3,
};

/// Runs one invocation of the command-line tool. args excludes the program
/// name. Subcommands: train, evaluate, gradcheck, synth-data, report.
int run_cli(const std::vector<std::string>& args);

}  // namespace reno::cli
