// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "vlsim/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vlsim::run_cli(args, std::cout, std::cerr);
}
