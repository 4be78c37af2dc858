// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Small corpora and scratch directories shared by the test suites.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "qualmix/corpus.hpp"

namespace fixture {

// A corpus small enough for unit tests yet with every augmentation kind.
inline qualmix::GeneratorConfig tiny_generator(std::uint64_t seed = 1) {
  qualmix::GeneratorConfig g;
  g.n_originals = 24;
  g.augments_per_original = 2;
  g.d = 6;
  g.d_t = 8;
  g.latent.nuisance_rank = 3;
  g.seed = seed;
  return g;
}

inline qualmix::Corpus tiny_corpus(std::uint64_t seed = 1) {
  return qualmix::generate_corpus(tiny_generator(seed));
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "qualmix_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
