// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Reference semantics for every kernel. SIMD variants must match these
// results bit for bit; see the ordering contract in kernels.hpp.

#include <cmath>

#include "qualmix/kernels.hpp"

namespace qualmix::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    acc[0] = acc[0] + a[i] * b[i];
    acc[1] = acc[1] + a[i + 1] * b[i + 1];
    acc[2] = acc[2] + a[i + 2] * b[i + 2];
    acc[3] = acc[3] + a[i + 3] * b[i + 3];
  }
  for (std::size_t i = n4; i < n; ++i) {
    acc[i - n4] = acc[i - n4] + a[i] * b[i];
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void gemv_scalar(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = dot_scalar(w + r * cols, x, cols);
    y[r] = bias != nullptr ? s + bias[r] : s;
  }
}

void gemv_t_acc_scalar(const double* w, std::size_t rows, std::size_t cols,
                       const double* v, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_scalar(v[r], w + r * cols, out, cols);
  }
}

void ger_scalar(double* g, std::size_t rows, std::size_t cols, const double* u,
                const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_scalar(u[r], v, g + r * cols, cols);
  }
}

void adam_scalar(double* param, double* m, double* v, const double* grad,
                 std::size_t n, const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] = param[i] - (c.lr * m_hat) / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Backend::kScalar, "scalar",      dot_scalar,
                                 axpy_scalar,      gemv_scalar,   gemv_t_acc_scalar,
                                 ger_scalar,       adam_scalar};
  return table;
}

}  // namespace qualmix::kernels
