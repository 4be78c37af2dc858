// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace qualmix {

// Runtime failure: bad files, checksum mismatches, numerical breakdown.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration or arguments. The CLI maps this to
// exit code 1 and every other Error to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qualmix
