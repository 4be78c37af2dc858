// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "qualmix/kernels.hpp"

namespace qualmix::kernels {

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__) || defined(_M_IX86)
#define QUALMIX_HAVE_AVX2_TU 1
const KernelTable& avx2_table();
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define QUALMIX_HAVE_NEON_TU 1
const KernelTable& neon_table();
#endif

}  // namespace qualmix::kernels
