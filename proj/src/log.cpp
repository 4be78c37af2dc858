// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace qualmix::log {
namespace {

std::atomic<Level> g_level{Level::kWarning};
std::mutex g_mutex;

void emit(Level at, std::string_view tag, std::string_view message) {
  if (at < g_level.load(std::memory_order_relaxed)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[qualmix " << tag << "] " << message << '\n';
}

}  // namespace

void set_level(Level level) { g_level.store(level, std::memory_order_relaxed); }
Level level() { return g_level.load(std::memory_order_relaxed); }

void info(std::string_view message) { emit(Level::kInfo, "info", message); }
void warn(std::string_view message) { emit(Level::kWarning, "warn", message); }

}  // namespace qualmix::log
