// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Dense double-precision inner loops with scalar, AVX2 and NEON variants.
//
// Every variant reproduces the scalar reference bit for bit. Reductions use
// four lane accumulators: element i lands in lane (i % 4) for the blocked
// prefix, tail element n4 + j lands in lane j, and the lanes are combined
// as (l0 + l1) + (l2 + l3). Elementwise kernels perform exactly one rounding
// per arithmetic operation in the order written in scalar.cpp. No kernel
// uses fused multiply-add.

#pragma once

#include <cstddef>
#include <string_view>

namespace qualmix::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Backend backend;
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // y[r] = dot(W[r], x) + (bias ? bias[r] : 0); W row-major rows x cols.
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols,
               const double* x, const double* bias, double* y);

  // out += W^T v, accumulated row by row in ascending row order.
  void (*gemv_t_acc)(const double* w, std::size_t rows, std::size_t cols,
                     const double* v, double* out);

  // G += u v^T
  void (*ger)(double* g, std::size_t rows, std::size_t cols, const double* u,
              const double* v);

  // Bias-corrected Adam update over n contiguous parameters.
  void (*adam)(double* param, double* m, double* v, const double* grad,
               std::size_t n, const AdamCoeffs& c);
};

const KernelTable& scalar_table();
bool available(Backend backend);
const KernelTable& table(Backend backend);

// Kernels used by the rest of the library. Chosen on first use from the
// QUALMIX_KERNELS environment variable (scalar|avx2|neon|auto) and the CPU.
const KernelTable& active();

// Overrides the active backend; throws ConfigError when unavailable.
void select(Backend backend);

Backend parse_backend(std::string_view name);
std::string_view backend_name(Backend backend);

}  // namespace qualmix::kernels
