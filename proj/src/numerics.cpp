// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qualmix/error.hpp"
#include "qualmix/kernels.hpp"

namespace qualmix {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                std::to_string(b) + ")");
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  return kernels::active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  kernels::active().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(ConstMatRef w, std::span<const double> x, std::span<const double> bias,
          std::span<double> y) {
  require_same_size(w.cols(), x.size(), "gemv input");
  require_same_size(w.rows(), y.size(), "gemv output");
  if (!bias.empty()) require_same_size(w.rows(), bias.size(), "gemv bias");
  kernels::active().gemv(w.data(), w.rows(), w.cols(), x.data(),
                         bias.empty() ? nullptr : bias.data(), y.data());
}

void gemv_t_acc(ConstMatRef w, std::span<const double> v, std::span<double> out) {
  require_same_size(w.rows(), v.size(), "gemv_t input");
  require_same_size(w.cols(), out.size(), "gemv_t output");
  kernels::active().gemv_t_acc(w.data(), w.rows(), w.cols(), v.data(), out.data());
}

void ger(MatRef g, std::span<const double> u, std::span<const double> v) {
  require_same_size(g.rows(), u.size(), "ger rows");
  require_same_size(g.cols(), v.size(), "ger cols");
  kernels::active().ger(g.data(), g.rows(), g.cols(), u.data(), v.data());
}

namespace {
constexpr double kInvSqrt2 = std::numbers::sqrt2 / 2.0;
}  // namespace

double gelu(double x) { return 0.5 * x * std::erfc(-x * kInvSqrt2); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * std::erfc(-x * kInvSqrt2);
  const double pdf = std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
  return cdf + x * pdf;
}

double sigmoid(double x) {
  // Clamped so the result stays strictly inside (0, 1).
  constexpr double kLo = std::numeric_limits<double>::denorm_min();
  constexpr double kHi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return std::clamp(s, kLo, kHi);
}

double bce_with_logit(double logit, int label) {
  const double y = label != 0 ? 1.0 : 0.0;
  return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

double softmax_cross_entropy(std::span<const double> logits, std::size_t target) {
  if (target >= logits.size()) throw Error("invalid target index");
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - max_logit);
  return (max_logit + std::log(sum)) - logits[target];
}

double softmax_cross_entropy_grad(std::span<const double> logits, std::size_t target,
                                  std::span<double> grad) {
  if (target >= logits.size()) throw Error("invalid target index");
  require_same_size(logits.size(), grad.size(), "softmax_cross_entropy_grad");
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    grad[k] = std::exp(logits[k] - max_logit);
    sum += grad[k];
  }
  for (double& g : grad) g /= sum;
  grad[target] -= 1.0;
  return (max_logit + std::log(sum)) - logits[target];
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  require_same_size(params.size(), grads.size(), "adam_step grads");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  require_same_size(params.size(), state.m.size(), "adam_step state");
  require_same_size(params.size(), state.v.size(), "adam_step state");
  if (!all_finite(grads)) throw Error("adam_step: non-finite gradient");

  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const AdamConfig& cfg = state.config;
  const kernels::AdamCoeffs coeffs{cfg.lr,
                                   cfg.beta1,
                                   cfg.beta2,
                                   cfg.eps,
                                   1.0 - std::pow(cfg.beta1, t),
                                   1.0 - std::pow(cfg.beta2, t)};
  kernels::active().adam(params.data(), state.m.data(), state.v.data(), grads.data(),
                         params.size(), coeffs);
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h) {
  if (!(h > 0.0)) throw Error("finite_diff_grad: step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = probe[j];
    probe[j] = saved + h;
    const double up = f(probe);
    probe[j] = saved - h;
    const double down = f(probe);
    probe[j] = saved;
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace qualmix
