// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Pooled-feature training records, the JSONL corpus format, and a seeded
// synthetic generator whose augmentations carry known corruption.
//
// A corpus file is one JSON header line followed by one JSON record per
// line:
//
//   {"d":64,"d_t":96,"vocab_size":8,"seed":7,"generator_version":"...",
//    "verbalizer":{...}}
//   {"id":"s000000","h_v":[...],"h_a":[...]|null,"h_t_raw":[...],
//    "polarity":1,"sentiment":0.42,"origin":"original","parent_id":null,
//    "hidden_quality":null,"target_tokens":[1,5,7,-100]}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qualmix {

inline constexpr int kIgnoreIndex = -100;

enum class Origin { kOriginal, kAugmented };

std::string_view origin_name(Origin origin);

// 1 when y >= 0 (neutral counts as positive), else 0. Throws Error when y is
// outside [-1, 1].
int derive_polarity(double y);

// Equal-width bin of [-1, 1] into k classes. k == 2 defers to
// derive_polarity so the sign convention is shared project-wide.
int sentiment_bin(double y, int k);

// Token scheme for the surrogate sequence target: [polarity, intensity bin,
// eos, IGNORE]. Intensity bins are the five equal-width bins of [-1, 1].
struct Verbalizer {
  static constexpr int kBins = 5;
  static constexpr std::size_t kPolarityPosition = 0;
  static constexpr std::size_t kBinPosition = 1;
  static constexpr std::size_t kSequenceLength = 4;

  int negative_token = 0;
  int positive_token = 1;
  int first_bin_token = 2;
  int eos_token = 7;

  int min_vocab() const;
  std::vector<int> encode(double sentiment) const;
  // Polarity token fixes the sign, bin token the magnitude (bin center, or
  // 0.1 for the central bin). Unknown tokens fall back to negative / central.
  double decode(int polarity_token, int bin_token) const;

  friend bool operator==(const Verbalizer&, const Verbalizer&) = default;
};

struct CorpusHeader {
  int d = 64;
  int d_t = 96;
  int vocab_size = 8;
  std::uint64_t seed = 0;
  std::string generator_version;
  Verbalizer verbalizer;

  friend bool operator==(const CorpusHeader&, const CorpusHeader&) = default;
};

struct FeatureSample {
  std::string id;
  std::vector<double> h_v;
  std::optional<std::vector<double>> h_a;  // absent = missing audio
  std::vector<double> h_t_raw;
  int polarity = 1;
  double sentiment = 0.0;
  Origin origin = Origin::kOriginal;
  std::optional<std::string> parent_id;
  // Ground truth for synthetic corpora. Evaluation only; training never reads it.
  std::optional<double> hidden_quality;
  std::vector<int> target_tokens;

  friend bool operator==(const FeatureSample&, const FeatureSample&) = default;
};

// Validated, immutable-after-construction collection of samples.
class Corpus {
 public:
  Corpus() = default;
  // Throws Error describing the first violated invariant.
  Corpus(CorpusHeader header, std::vector<FeatureSample> samples);

  const CorpusHeader& header() const { return header_; }
  const std::vector<FeatureSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  const FeatureSample& operator[](std::size_t i) const { return samples_[i]; }
  std::optional<std::size_t> index_of(std::string_view id) const;

  std::size_t count(Origin origin) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.header_ == b.header_ && a.samples_ == b.samples_;
  }

 private:
  CorpusHeader header_;
  std::vector<FeatureSample> samples_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct CorruptionProfile {
  double sigma_benign = 0.9;       // fraction of noise refreshed in benign augments, in [0, 1]
  double p_swap = 0.1;             // cross-modal swap with an opposite-polarity donor
  double p_degrade = 0.1;          // masking degradation of h_v / h_a
  double degrade_mask_rate = 0.5;
  double p_label_noise = 0.1;      // features drift into the opposite polarity
  double p_missing_audio = 0.05;   // originals generated without h_a

  static CorruptionProfile clean();
  void validate() const;  // throws ConfigError
};

// Latent generative model. Each modality m has a base vector b_m, a unit
// sentiment direction u_m and a nuisance basis A_m (rank unit columns); a
// sample with sentiment y and polarity p gets
//   h_m = b_m + signal * ((2p - 1) * cluster_offset + y) * u_m
//         + nuisance_scale * A_m z + noise * eps_m,   z, eps_m ~ N(0, I),
// with the nuisance factors z shared by the modalities of one sample.
struct LatentModelConfig {
  double base_scale = 1.0;
  double signal = 3.0;
  double cluster_offset = 0.25;
  double noise = 1.0;
  std::size_t nuisance_rank = 32;
  double nuisance_scale = 5.0;
};

struct GeneratorConfig {
  std::size_t n_originals = 400;
  std::size_t augments_per_original = 2;
  CorruptionProfile profile;
  LatentModelConfig latent;
  std::uint64_t seed = 0;
  int d = 64;
  int d_t = 96;
  int vocab_size = 8;

  void validate() const;  // throws ConfigError
};

inline constexpr std::string_view kGeneratorVersion = "qualmix-synth/1";

// Deterministic in the config. Originals alternate polarity (even index
// positive); augmentations are emitted after all originals.
Corpus generate_corpus(const GeneratorConfig& config);

std::string serialize_corpus_header(const CorpusHeader& header);
CorpusHeader parse_corpus_header(std::string_view text);
std::string serialize_corpus(const Corpus& corpus);
Corpus parse_corpus(std::string_view text);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

// Digest of every field of every record plus the header.
std::string corpus_checksum(const Corpus& corpus);
// Digest of the feature arrays only (h_v, h_a, h_t_raw).
std::string feature_checksum(const Corpus& corpus);

// Stratified split of originals into (train, test). Each augmentation
// follows its parent. Seeded by the corpus header seed.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double test_fraction);

// Per-sample keep mask that retains ceil(fraction * n) originals of each
// polarity (seeded by the header seed). An augmentation is kept exactly when
// its parent is kept; orphans are dropped.
std::vector<bool> select_originals(const Corpus& corpus, double fraction);

}  // namespace qualmix
