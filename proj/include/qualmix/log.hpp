// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace qualmix::log {

enum class Level { kDebug = 0, kInfo = 1, kWarning = 2, kQuiet = 3 };

void set_level(Level level);
Level level();

void info(std::string_view message);
void warn(std::string_view message);

}  // namespace qualmix::log
