// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Quality-aware scorer.
//
// Input assembly: x = [h_v; h_a (zeros when missing); W_t h_t_raw + b_t;
// Emb(p)] in R^{4d}. Scorer: logit = w2 . GELU(W1 x + b1) + b2, score =
// sigmoid(logit). Training minimises the alpha-weighted mean of the
// per-family BCE losses over positives and the three forged negative
// families; only scorer parameters receive gradients, the pooled features
// are constants.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qualmix/corpus.hpp"
#include "qualmix/negative_forge.hpp"
#include "qualmix/numerics.hpp"

namespace qualmix {

struct QaShape {
  std::size_t d = 0;
  std::size_t d_t = 0;
  std::size_t hidden = 0;

  std::size_t input_dim() const { return 4 * d; }
  friend bool operator==(const QaShape&, const QaShape&) = default;
};

// All scorer parameters in one flat buffer, laid out as
//   W_t (d x d_t) | b_t (d) | Emb (2 x d) | W1 (H x 4d) | b1 (H) | w2 (H) | b2.
// The same type doubles as the gradient accumulator.
class QaParams {
 public:
  QaParams() = default;
  explicit QaParams(QaShape shape);  // all zeros

  // W1 and W_t ~ U(+-1/sqrt(fan_in)); everything else zero, so the
  // untrained score is exactly 0.5.
  static QaParams initialize(QaShape shape, std::uint64_t seed);

  const QaShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  MatRef text_weight() { return {values_.data() + off_wt(), shape_.d, shape_.d_t}; }
  ConstMatRef text_weight() const { return {values_.data() + off_wt(), shape_.d, shape_.d_t}; }
  std::span<double> text_bias() { return {values_.data() + off_bt(), shape_.d}; }
  std::span<const double> text_bias() const { return {values_.data() + off_bt(), shape_.d}; }
  MatRef embedding() { return {values_.data() + off_emb(), 2, shape_.d}; }
  ConstMatRef embedding() const { return {values_.data() + off_emb(), 2, shape_.d}; }
  MatRef w1() { return {values_.data() + off_w1(), shape_.hidden, shape_.input_dim()}; }
  ConstMatRef w1() const { return {values_.data() + off_w1(), shape_.hidden, shape_.input_dim()}; }
  std::span<double> b1() { return {values_.data() + off_b1(), shape_.hidden}; }
  std::span<const double> b1() const { return {values_.data() + off_b1(), shape_.hidden}; }
  std::span<double> w2() { return {values_.data() + off_w2(), shape_.hidden}; }
  std::span<const double> w2() const { return {values_.data() + off_w2(), shape_.hidden}; }
  double& b2() { return values_[off_b2()]; }
  double b2() const { return values_[off_b2()]; }

  friend bool operator==(const QaParams&, const QaParams&) = default;

 private:
  std::size_t off_wt() const { return 0; }
  std::size_t off_bt() const { return shape_.d * shape_.d_t; }
  std::size_t off_emb() const { return off_bt() + shape_.d; }
  std::size_t off_w1() const { return off_emb() + 2 * shape_.d; }
  std::size_t off_b1() const { return off_w1() + shape_.hidden * shape_.input_dim(); }
  std::size_t off_w2() const { return off_b1() + shape_.hidden; }
  std::size_t off_b2() const { return off_w2() + shape_.hidden; }

  QaShape shape_;
  std::vector<double> values_;
};

// Digest of shape and parameter values.
std::string qa_checksum(const QaParams& params);

// ---- forward pass ---------------------------------------------------------

// Writes x (size 4d). Throws Error on dimension mismatch.
void assemble_input(const QaItem& item, const QaParams& params, std::span<double> x);
std::vector<double> assemble_input(const QaItem& item, const QaParams& params);

double qa_logit(std::span<const double> x, const QaParams& params);
double qa_score(const QaItem& item, const QaParams& params);

// ---- training objective ---------------------------------------------------

// Order: pos, mix, mask, flip.
using FamilyWeights = std::array<double, kFamilyCount>;

// Weighted family mean of BCE losses. Empty families drop out of both the
// sum and the normaliser. Throws Error when every family is empty or every
// non-empty family has zero weight.
double qa_loss(const ForgedBatch& forged, const QaParams& params, const FamilyWeights& alpha);

// Same value; accumulates d loss / d params into grad (same shape).
double qa_loss_grad(const ForgedBatch& forged, const QaParams& params,
                    const FamilyWeights& alpha, QaParams& grad);

// ---- stage 0 --------------------------------------------------------------

struct QaConfig {
  FamilyWeights alpha{1.0, 1.0, 1.0, 1.0};
  double rho = 0.3;
  std::size_t batch_size = 32;
  std::size_t steps = 1500;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::size_t hidden = 0;  // 0 selects 2d
  // Positives come from originals unless this is set.
  bool positives_include_augmented = false;
  // Fraction of originals (per polarity) visible to training.
  double original_fraction = 1.0;

  void validate() const;  // throws ConfigError
};

struct Stage0Result {
  QaParams params;
  std::vector<double> loss_trace;
};

// Minibatch Adam on the forged-negative objective. Reads only features and
// polarity from the corpus; never touches hidden_quality.
Stage0Result train_stage0(const Corpus& corpus, const QaConfig& config);

// ---- scoring and weights --------------------------------------------------

// Scores aligned with corpus order. threads > 1 scores disjoint shards
// concurrently; the result is identical to the sequential one.
std::vector<double> score_corpus(const Corpus& corpus, const QaParams& params,
                                 std::size_t threads = 1);

struct WeightMapConfig {
  double w_min = 0.1;
  double w_max = 1.5;
  double gamma = 1.0;

  void validate() const;  // throws ConfigError
  friend bool operator==(const WeightMapConfig&, const WeightMapConfig&) = default;
};

// w_min + s^gamma * (w_max - w_min).
double map_weight(double score, const WeightMapConfig& cfg);
// Originals always weigh 1; augmentations go through map_weight.
double sample_weight(double score, Origin origin, const WeightMapConfig& cfg);

struct WeightEntry {
  std::string id;
  double score = 0.0;
  double weight = 1.0;
  Origin origin = Origin::kOriginal;

  friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

struct WeightFile {
  std::vector<WeightEntry> entries;  // sorted by id
  WeightMapConfig map;
  std::string qa_checksum;
  std::string corpus_checksum;
  std::string created_at;

  std::optional<double> weight_of(std::string_view id) const;
  friend bool operator==(const WeightFile&, const WeightFile&) = default;
};

WeightFile build_weight_file(const Corpus& corpus, const QaParams& params,
                             const WeightMapConfig& cfg);
std::string serialize_weight_file(const WeightFile& file);
WeightFile parse_weight_file(std::string_view text);
WeightFile load_weight_file(const std::filesystem::path& path);
WeightFile export_weights(const Corpus& corpus, const QaParams& params,
                          const WeightMapConfig& cfg, const std::filesystem::path& path);

// ---- snapshots ------------------------------------------------------------

struct QaSnapshot {
  CorpusHeader header;  // echo of the training corpus header
  QaParams params;
};

std::string serialize_qa_snapshot(const QaSnapshot& snapshot);
QaSnapshot parse_qa_snapshot(std::string_view text);
void save_qa_snapshot(const QaSnapshot& snapshot, const std::filesystem::path& path);
QaSnapshot load_qa_snapshot(const std::filesystem::path& path);

}  // namespace qualmix
