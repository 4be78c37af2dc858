// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/negative_forge.hpp"

#include "qualmix/error.hpp"
#include "qualmix/log.hpp"

namespace qualmix {

QaItem make_qa_item(const FeatureSample& sample, int d) {
  QaItem item;
  item.h_v = sample.h_v;
  item.h_a = sample.h_a ? *sample.h_a : std::vector<double>(static_cast<std::size_t>(d), 0.0);
  item.h_t_raw = sample.h_t_raw;
  item.polarity = sample.polarity;
  return item;
}

const std::vector<ForgedItem>& ForgedBatch::family(Family f) const {
  switch (f) {
    case Family::kPos:
      return pos;
    case Family::kMix:
      return mix;
    case Family::kMask:
      return mask;
    case Family::kFlip:
      return flip;
  }
  return pos;
}

std::vector<ForgedItem> mix_negatives(std::span<const QaItem> batch, Rng& rng) {
  std::vector<ForgedItem> out;
  std::vector<std::size_t> partners;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    partners.clear();
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (batch[j].polarity != batch[i].polarity) partners.push_back(j);
    }
    if (partners.empty()) continue;
    const std::size_t j = partners[rng.below(partners.size())];
    const bool keep_visual = rng.bernoulli(0.5);
    ForgedItem f{batch[i], Provenance{i, j, keep_visual, std::nullopt}};
    if (keep_visual) {
      f.item.h_a = batch[j].h_a;
    } else {
      f.item.h_v = batch[j].h_v;
    }
    out.push_back(std::move(f));
  }
  if (out.empty() && !batch.empty()) {
    log::warn("mix_negatives: batch has a single polarity; no mixed negatives this step");
  }
  return out;
}

std::vector<ForgedItem> mask_negatives(std::span<const QaItem> batch, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("mask rate rho must be in [0, 1]");
  std::vector<ForgedItem> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::uint64_t seed = rng.next_u64();
    Rng item_rng(seed);
    ForgedItem f{batch[i], Provenance{i, std::nullopt, std::nullopt, seed}};
    for (auto* pathway : {&f.item.h_v, &f.item.h_a, &f.item.h_t_raw}) {
      for (double& x : *pathway) {
        if (item_rng.bernoulli(rho)) x = 0.0;
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<ForgedItem> flip_negatives(std::span<const QaItem> batch) {
  std::vector<ForgedItem> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ForgedItem f{batch[i], Provenance{i, std::nullopt, std::nullopt, std::nullopt}};
    f.item.polarity = 1 - f.item.polarity;
    out.push_back(std::move(f));
  }
  return out;
}

ForgedBatch forge_batch(std::span<const QaItem> batch, double rho, Rng& rng) {
  ForgedBatch forged;
  forged.pos.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forged.pos.push_back(ForgedItem{batch[i], Provenance{i, std::nullopt, std::nullopt, std::nullopt}});
  }
  forged.mix = mix_negatives(batch, rng);
  forged.mask = mask_negatives(batch, rho, rng);
  forged.flip = flip_negatives(batch);
  return forged;
}

}  // namespace qualmix
