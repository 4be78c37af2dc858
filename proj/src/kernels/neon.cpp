// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// AArch64 NEON kernels. Two float64x2 registers hold lanes {0,1} and {2,3}
// of the reference accumulator. Built with -ffp-contract=off so mul/add
// pairs are never fused into fmla.

#include <arm_neon.h>

#include <cmath>

#include "tables.hpp"

namespace qualmix::kernels {
namespace {

inline double finish_lanes(float64x2_t lo, float64x2_t hi, const double* a,
                           const double* b, std::size_t n4, std::size_t n) {
  double lanes[4];
  vst1q_f64(lanes, lo);
  vst1q_f64(lanes + 2, hi);
  for (std::size_t i = n4; i < n; ++i) {
    lanes[i - n4] = lanes[i - n4] + a[i] * b[i];
  }
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n - n % 4;
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n4; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  return finish_lanes(lo, hi, a, b, n4, n);
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const std::size_t n2 = n - n % 2;
  const float64x2_t va = vdupq_n_f64(alpha);
  for (std::size_t i = 0; i < n2; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (std::size_t i = n2; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void gemv_neon(const double* w, std::size_t rows, std::size_t cols,
               const double* x, const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = dot_neon(w + r * cols, x, cols);
    y[r] = bias != nullptr ? s + bias[r] : s;
  }
}

void gemv_t_acc_neon(const double* w, std::size_t rows, std::size_t cols,
                     const double* v, double* out) {
  for (std::size_t r = 0; r < rows; ++r) axpy_neon(v[r], w + r * cols, out, cols);
}

void ger_neon(double* g, std::size_t rows, std::size_t cols, const double* u,
              const double* v) {
  for (std::size_t r = 0; r < rows; ++r) axpy_neon(u[r], v, g + r * cols, cols);
}

void adam_neon(double* param, double* m, double* v, const double* grad,
               std::size_t n, const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  const float64x2_t b1 = vdupq_n_f64(c.beta1);
  const float64x2_t b2 = vdupq_n_f64(c.beta2);
  const float64x2_t omb1 = vdupq_n_f64(one_minus_b1);
  const float64x2_t omb2 = vdupq_n_f64(one_minus_b2);
  const float64x2_t bc1 = vdupq_n_f64(c.bias_correction1);
  const float64x2_t bc2 = vdupq_n_f64(c.bias_correction2);
  const float64x2_t lr = vdupq_n_f64(c.lr);
  const float64x2_t eps = vdupq_n_f64(c.eps);
  const std::size_t n2 = n - n % 2;
  for (std::size_t i = 0; i < n2; i += 2) {
    const float64x2_t g = vld1q_f64(grad + i);
    const float64x2_t mi = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(omb1, g));
    const float64x2_t vi =
        vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)), vmulq_f64(omb2, vmulq_f64(g, g)));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t m_hat = vdivq_f64(mi, bc1);
    const float64x2_t v_hat = vdivq_f64(vi, bc2);
    const float64x2_t step =
        vdivq_f64(vmulq_f64(lr, m_hat), vaddq_f64(vsqrtq_f64(v_hat), eps));
    vst1q_f64(param + i, vsubq_f64(vld1q_f64(param + i), step));
  }
  for (std::size_t i = n2; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] = param[i] - (c.lr * m_hat) / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{Backend::kNeon, "neon",    dot_neon,
                                 axpy_neon,      gemv_neon, gemv_t_acc_neon,
                                 ger_neon,       adam_neon};
  return table;
}

}  // namespace qualmix::kernels
