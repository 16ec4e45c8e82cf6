// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace oeibo::cli {

/// Entry point behind the `oeibo` binary; `args` excludes the program name.
/// Exit codes: 0 success, 1 runtime/validation failure, 2 usage or
/// configuration error.
int run_cli(const std::vector<std::string>& args);

}  // namespace oeibo::cli
