// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2 kernels. Compiled with -mavx2 only (no -mfma); dispatch.cpp never
// calls into this file unless the CPU reports AVX2 support.

#include <immintrin.h>

#include <cmath>

#include "tables.hpp"

namespace qualmix::kernels {
namespace {

inline double finish_lanes(__m256d acc, const double* a, const double* b,
                           std::size_t n4, std::size_t n) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (std::size_t i = n4; i < n; ++i) {
    lanes[i - n4] = lanes[i - n4] + a[i] * b[i];
  }
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n - n % 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  return finish_lanes(acc, a, b, n4, n);
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const std::size_t n4 = n - n % 4;
  const __m256d va = _mm256_set1_pd(alpha);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (std::size_t i = n4; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

// Four rows share each load of x; every row keeps its own lane accumulator
// so the per-row summation order is the one dot_avx2 uses.
void gemv_avx2(const double* w, std::size_t rows, std::size_t cols,
               const double* x, const double* bias, double* y) {
  const std::size_t n4 = cols - cols % 4;
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = w + r * cols;
    const double* w1 = w0 + cols;
    const double* w2 = w1 + cols;
    const double* w3 = w2 + cols;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n4; i += 4) {
      const __m256d xv = _mm256_loadu_pd(x + i);
      a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(w0 + i), xv));
      a1 = _mm256_add_pd(a1, _mm256_mul_pd(_mm256_loadu_pd(w1 + i), xv));
      a2 = _mm256_add_pd(a2, _mm256_mul_pd(_mm256_loadu_pd(w2 + i), xv));
      a3 = _mm256_add_pd(a3, _mm256_mul_pd(_mm256_loadu_pd(w3 + i), xv));
    }
    const double s[4] = {finish_lanes(a0, w0, x, n4, cols), finish_lanes(a1, w1, x, n4, cols),
                         finish_lanes(a2, w2, x, n4, cols), finish_lanes(a3, w3, x, n4, cols)};
    for (std::size_t k = 0; k < 4; ++k) {
      y[r + k] = bias != nullptr ? s[k] + bias[r + k] : s[k];
    }
  }
  for (; r < rows; ++r) {
    const double s = dot_avx2(w + r * cols, x, cols);
    y[r] = bias != nullptr ? s + bias[r] : s;
  }
}

void gemv_t_acc_avx2(const double* w, std::size_t rows, std::size_t cols,
                     const double* v, double* out) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(v[r], w + r * cols, out, cols);
}

void ger_avx2(double* g, std::size_t rows, std::size_t cols, const double* u,
              const double* v) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(u[r], v, g + r * cols, cols);
}

void adam_avx2(double* param, double* m, double* v, const double* grad,
               std::size_t n, const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(one_minus_b1);
  const __m256d omb2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)),
                                     _mm256_mul_pd(omb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat),
                                       _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] = param[i] - (c.lr * m_hat) / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Backend::kAvx2, "avx2",    dot_avx2,
                                 axpy_avx2,      gemv_avx2, gemv_t_acc_avx2,
                                 ger_avx2,       adam_avx2};
  return table;
}

}  // namespace qualmix::kernels
