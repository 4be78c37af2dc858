// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic negatives for the quality scorer: cross-modal mixing with an
// opposite-polarity donor, per-coordinate random masking, and polarity
// label flipping. All forging happens on raw (pre-projection) features.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qualmix/corpus.hpp"
#include "qualmix/rng.hpp"

namespace qualmix {

// Scorer input before assembly. h_a is always materialised; missing audio
// is represented by a zero vector.
struct QaItem {
  std::vector<double> h_v;
  std::vector<double> h_a;
  std::vector<double> h_t_raw;
  int polarity = 1;

  friend bool operator==(const QaItem&, const QaItem&) = default;
};

QaItem make_qa_item(const FeatureSample& sample, int d);

struct Provenance {
  std::size_t source = 0;                 // index into the forging batch
  std::optional<std::size_t> donor;       // mix only
  std::optional<bool> keep_visual;        // mix only: z = 1 keeps h_v, swaps h_a
  std::optional<std::uint64_t> mask_seed; // mask only

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ForgedItem {
  QaItem item;
  Provenance provenance;

  friend bool operator==(const ForgedItem&, const ForgedItem&) = default;
};

enum class Family { kPos = 0, kMix = 1, kMask = 2, kFlip = 3 };
inline constexpr std::size_t kFamilyCount = 4;

// Training target for each family: positives 1, every negative 0.
inline int family_label(Family f) { return f == Family::kPos ? 1 : 0; }

struct ForgedBatch {
  std::vector<ForgedItem> pos;
  std::vector<ForgedItem> mix;
  std::vector<ForgedItem> mask;
  std::vector<ForgedItem> flip;

  const std::vector<ForgedItem>& family(Family f) const;
  friend bool operator==(const ForgedBatch&, const ForgedBatch&) = default;
};

// For each item with at least one opposite-polarity partner in the batch:
// pick a donor uniformly among them, draw z ~ Bernoulli(0.5); z = 1 keeps
// h_v and takes the donor's h_a, z = 0 takes the donor's h_v and keeps h_a.
// Text and polarity stay the source's. Items without a partner are skipped.
std::vector<ForgedItem> mix_negatives(std::span<const QaItem> batch, Rng& rng);

// Zeroes each coordinate of h_v, h_a and h_t_raw independently with
// probability rho. Throws ConfigError when rho is outside [0, 1].
std::vector<ForgedItem> mask_negatives(std::span<const QaItem> batch, double rho, Rng& rng);

// Features unchanged, polarity replaced by 1 - p.
std::vector<ForgedItem> flip_negatives(std::span<const QaItem> batch);

ForgedBatch forge_batch(std::span<const QaItem> batch, double rho, Rng& rng);

}  // namespace qualmix
