// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "qualmix/cli.hpp"

int main(int argc, char** argv) {
  return qualmix::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
