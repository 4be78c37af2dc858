// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qualmix {

// Runs the command line `args` (without the program name). Returns 0 on
// success, 1 on a usage or validation error, 2 on a runtime error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qualmix
