// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "qualmix/error.hpp"
#include "qualmix/kernels.hpp"
#include "tables.hpp"

namespace qualmix::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(QUALMIX_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const char* env = std::getenv("QUALMIX_KERNELS");
  if (env != nullptr && std::string_view(env) != "auto" && *env != '\0') {
    const Backend wanted = parse_backend(env);
    if (!available(wanted)) {
      throw ConfigError("QUALMIX_KERNELS=" + std::string(env) + " is not available on this CPU");
    }
    return &table(wanted);
  }
  if (available(Backend::kAvx2)) return &table(Backend::kAvx2);
  if (available(Backend::kNeon)) return &table(Backend::kNeon);
  return &scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

bool available(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return cpu_has_avx2();
    case Backend::kNeon:
#if defined(QUALMIX_HAVE_NEON_TU)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend backend) {
  if (!available(backend)) {
    throw ConfigError("kernel backend '" + std::string(backend_name(backend)) +
                      "' is not available on this CPU");
  }
  switch (backend) {
#if defined(QUALMIX_HAVE_AVX2_TU)
    case Backend::kAvx2:
      return avx2_table();
#endif
#if defined(QUALMIX_HAVE_NEON_TU)
    case Backend::kNeon:
      return neon_table();
#endif
    default:
      return scalar_table();
  }
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    const KernelTable* fresh = initial_table();
    // Losing the race is fine: both candidates come from the same inputs.
    g_active.compare_exchange_strong(t, fresh, std::memory_order_acq_rel);
    t = g_active.load(std::memory_order_acquire);
  }
  return *t;
}

void select(Backend backend) { g_active.store(&table(backend), std::memory_order_release); }

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  if (name == "neon") return Backend::kNeon;
  throw ConfigError("unknown kernel backend '" + std::string(name) + "'");
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

}  // namespace qualmix::kernels
