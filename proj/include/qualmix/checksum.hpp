// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace qualmix {

// Incremental SHA-256 over a canonical little-endian byte encoding, so the
// digest of the same values is identical on every host.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(Sha256&&) noexcept;
  Sha256& operator=(Sha256&&) noexcept;
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& bytes(std::span<const unsigned char> data);
  Sha256& u64(std::uint64_t value);
  Sha256& f64(double value);  // IEEE-754 bit pattern
  Sha256& f64s(std::span<const double> values);
  Sha256& str(std::string_view s);  // length-prefixed

  // "sha256:<64 hex digits>". Finalizes; the object cannot be updated after.
  std::string hex();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qualmix
