// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace qualmix {

// Seeded random stream with platform-independent output.
//
// std::mt19937_64 output is fixed by the standard, but the std::*_distribution
// adapters are not, so the conversions to uniform/normal/integer values are
// written out here. Streams for distinct purposes are keyed by
// derive(root_seed, tag, index), which makes per-sample generation
// independent of processing order.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(key) {}

  static std::uint64_t derive(std::uint64_t root, std::string_view tag, std::uint64_t index);
  static Rng stream(std::uint64_t root, std::string_view tag, std::uint64_t index) {
    return Rng(derive(root, tag, index));
  }

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal (Marsaglia polar method).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qualmix
