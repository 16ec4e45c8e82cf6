// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#include "oeibo/cli.hpp"

int main(int argc, char** argv) {
  return oeibo::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
