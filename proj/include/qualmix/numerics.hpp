// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Small dense linear algebra, activations, losses and the Adam optimizer.
// All arithmetic is IEEE-754 binary64; every function is pure.

#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

namespace qualmix {

// Row-major view over contiguous storage. T is double or const double.
template <typename T>
class MatView {
 public:
  MatView() = default;
  MatView(T* data, std::size_t rows, std::size_t cols) : data_(data), rows_(rows), cols_(cols) {}
  // NOLINTNEXTLINE(google-explicit-constructor)
  template <typename U>
    requires(std::is_const_v<T> && std::is_same_v<const U, T>)
  MatView(const MatView<U>& other)
      : data_(other.data()), rows_(other.rows()), cols_(other.cols()) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  T* data() const { return data_; }
  std::span<T> flat() const { return {data_, size()}; }
  std::span<T> row(std::size_t r) const {
    assert(r < rows_);
    return {data_ + r * cols_, cols_};
  }
  T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  T* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

using MatRef = MatView<double>;
using ConstMatRef = MatView<const double>;

// Owning matrix with a fixed shape.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  MatRef view() { return {data_.data(), rows_, cols_}; }
  ConstMatRef view() const { return {data_.data(), rows_, cols_}; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Thin span front-ends over the active kernel table.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// y = W x + bias (bias may be empty).
void gemv(ConstMatRef w, std::span<const double> x, std::span<const double> bias,
          std::span<double> y);
// out += W^T v
void gemv_t_acc(ConstMatRef w, std::span<const double> v, std::span<double> out);
// G += u v^T
void ger(MatRef g, std::span<const double> u, std::span<const double> v);

// Exact erf form: x * Phi(x).
double gelu(double x);
double gelu_derivative(double x);

double sigmoid(double x);

// Binary cross-entropy of sigmoid(logit) against label, in the stable form
// max(x, 0) - x*y + log1p(exp(-|x|)).
double bce_with_logit(double logit, int label);

// -log softmax(logits)[target]. Throws Error("invalid target index").
double softmax_cross_entropy(std::span<const double> logits, std::size_t target);

// Same loss; also writes d loss / d logits (softmax - onehot) into grad.
double softmax_cross_entropy_grad(std::span<const double> logits, std::size_t target,
                                  std::span<double> grad);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::size_t n) : config(cfg), m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update of params in place. Throws on size mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h for every coordinate.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h);

bool all_finite(std::span<const double> values);

}  // namespace qualmix
