// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "pingpong/cli.hpp"

int main(int argc, char** argv) {
  return pingpong::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
