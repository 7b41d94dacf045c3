// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace granum::cli {

/// Exit codes: 0 success, 1 data or runtime error, 2 usage error.
enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Runs the `granum` command line. Normal output goes to `out`, diagnostics
/// to `err`.
int run(int argc, const char *const *argv, std::ostream &out,
        std::ostream &err);

} // namespace granum::cli
