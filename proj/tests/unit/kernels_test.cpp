// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <vector>

#include "doctest.h"
#include "qualmix/error.hpp"
#include "qualmix/kernels.hpp"
#include "qualmix/rng.hpp"

namespace k = qualmix::kernels;

namespace {

std::vector<double> random_vec(qualmix::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0) * (rng.bernoulli(0.1) ? 1e6 : 1.0);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

std::vector<k::Backend> other_backends() {
  std::vector<k::Backend> out;
  for (k::Backend b : {k::Backend::kAvx2, k::Backend::kNeon}) {
    if (k::available(b)) out.push_back(b);
  }
  return out;
}

// Independent statement of the documented reduction order.
double four_lane_dot(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n / 4 * 4;
  for (std::size_t i = 0; i < n4; ++i) lane[i % 4] += a[i] * b[i];
  for (std::size_t i = n4; i < n; ++i) lane[i - n4] += a[i] * b[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar dot follows the four-lane order") {
    qualmix::Rng rng(11);
    for (std::size_t n = 0; n < 40; ++n) {
      const auto a = random_vec(rng, n);
      const auto b = random_vec(rng, n);
      CHECK(bitwise_equal(k::scalar_table().dot(a.data(), b.data(), n),
                          four_lane_dot(a.data(), b.data(), n)));
    }
  }

  TEST_CASE("scalar gemv rows equal dot plus bias") {
    qualmix::Rng rng(12);
    const std::size_t rows = 5, cols = 13;
    const auto w = random_vec(rng, rows * cols);
    const auto x = random_vec(rng, cols);
    const auto bias = random_vec(rng, rows);
    std::vector<double> y(rows);
    k::scalar_table().gemv(w.data(), rows, cols, x.data(), bias.data(), y.data());
    for (std::size_t r = 0; r < rows; ++r) {
      CHECK(bitwise_equal(y[r], four_lane_dot(w.data() + r * cols, x.data(), cols) + bias[r]));
    }
    k::scalar_table().gemv(w.data(), rows, cols, x.data(), nullptr, y.data());
    CHECK(bitwise_equal(y[0], four_lane_dot(w.data(), x.data(), cols)));
  }

  TEST_CASE("every backend matches scalar bit for bit") {
    const auto& ref = k::scalar_table();
    for (k::Backend backend : other_backends()) {
      const auto& t = k::table(backend);
      CAPTURE(t.name);
      qualmix::Rng rng(13);
      for (std::size_t n = 0; n < 41; ++n) {
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);
        CHECK(bitwise_equal(t.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)));

        auto y1 = random_vec(rng, n);
        auto y2 = y1;
        t.axpy(0.37, a.data(), y1.data(), n);
        ref.axpy(0.37, a.data(), y2.data(), n);
        CHECK(bitwise_equal(y1, y2));
      }
      for (std::size_t rows : {1u, 3u, 8u}) {
        for (std::size_t cols : {1u, 4u, 7u, 17u, 64u}) {
          const auto w = random_vec(rng, rows * cols);
          const auto x = random_vec(rng, cols);
          const auto v = random_vec(rng, rows);
          const auto bias = random_vec(rng, rows);
          std::vector<double> y1(rows), y2(rows);
          t.gemv(w.data(), rows, cols, x.data(), bias.data(), y1.data());
          ref.gemv(w.data(), rows, cols, x.data(), bias.data(), y2.data());
          CHECK(bitwise_equal(y1, y2));

          auto o1 = random_vec(rng, cols);
          auto o2 = o1;
          t.gemv_t_acc(w.data(), rows, cols, v.data(), o1.data());
          ref.gemv_t_acc(w.data(), rows, cols, v.data(), o2.data());
          CHECK(bitwise_equal(o1, o2));

          auto g1 = random_vec(rng, rows * cols);
          auto g2 = g1;
          t.ger(g1.data(), rows, cols, v.data(), x.data());
          ref.ger(g2.data(), rows, cols, v.data(), x.data());
          CHECK(bitwise_equal(g1, g2));
        }
      }
      for (std::size_t n : {1u, 5u, 16u, 33u}) {
        auto p1 = random_vec(rng, n), m1 = random_vec(rng, n), v1 = random_vec(rng, n);
        for (double& x : v1) x = x * x;
        auto p2 = p1, m2 = m1, v2 = v1;
        const auto g = random_vec(rng, n);
        const k::AdamCoeffs c{1e-3, 0.9, 0.999, 1e-8, 1.0 - 0.9 * 0.9, 1.0 - 0.999 * 0.999};
        t.adam(p1.data(), m1.data(), v1.data(), g.data(), n, c);
        ref.adam(p2.data(), m2.data(), v2.data(), g.data(), n, c);
        CHECK(bitwise_equal(p1, p2));
        CHECK(bitwise_equal(m1, m2));
        CHECK(bitwise_equal(v1, v2));
      }
    }
  }

  TEST_CASE("backend names round trip") {
    for (k::Backend b : {k::Backend::kScalar, k::Backend::kAvx2, k::Backend::kNeon}) {
      CHECK(k::parse_backend(k::backend_name(b)) == b);
    }
    CHECK_THROWS_AS(k::parse_backend("sse9"), qualmix::ConfigError);
    CHECK(k::available(k::Backend::kScalar));
  }

  TEST_CASE("selecting an unavailable backend is a config error") {
    const k::Backend before = k::active().backend;
    for (k::Backend b : {k::Backend::kAvx2, k::Backend::kNeon}) {
      if (!k::available(b)) CHECK_THROWS_AS(k::select(b), qualmix::ConfigError);
    }
    k::select(k::Backend::kScalar);
    CHECK(k::active().backend == k::Backend::kScalar);
    k::select(before);
  }
}
