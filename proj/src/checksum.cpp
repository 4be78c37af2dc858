// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/checksum.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>

#include "qualmix/error.hpp"

namespace qualmix {

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
  bool finished = false;
  ~Impl() { EVP_MD_CTX_free(ctx); }
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest initialisation failed");
  }
}

Sha256::~Sha256() = default;
Sha256::Sha256(Sha256&&) noexcept = default;
Sha256& Sha256::operator=(Sha256&&) noexcept = default;

Sha256& Sha256::bytes(std::span<const unsigned char> data) {
  if (impl_->finished) throw Error("sha256: update after finalisation");
  if (!data.empty() && EVP_DigestUpdate(impl_->ctx, data.data(), data.size()) != 1) {
    throw Error("sha256: update failed");
  }
  return *this;
}

Sha256& Sha256::u64(std::uint64_t value) {
  std::array<unsigned char, 8> le{};
  for (std::size_t i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(value >> (8 * i));
  return bytes(le);
}

Sha256& Sha256::f64(double value) { return u64(std::bit_cast<std::uint64_t>(value)); }

Sha256& Sha256::f64s(std::span<const double> values) {
  u64(values.size());
  for (double v : values) f64(v);
  return *this;
}

Sha256& Sha256::str(std::string_view s) {
  u64(s.size());
  return bytes({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
}

std::string Sha256::hex() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, digest.data(), &len) != 1) {
    throw Error("sha256: finalisation failed");
  }
  impl_->finished = true;
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "sha256:";
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace qualmix
