// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Weighted fine-tuning of a surrogate sequence head.
//
// The head reads x = [h_v; h_a (zeros when missing); h_t_raw], applies
// act = GELU(W_in x + b_in), and emits one row of vocab logits per target
// position: logits = W_out act + b_out, viewed as T x V. Per-sample loss is
// the mean token cross-entropy over non-IGNORE positions; the batch loss is
// (1/B) * sum_i w_i * loss_i with divisor B regardless of the weights.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qualmix/corpus.hpp"
#include "qualmix/numerics.hpp"
#include "qualmix/qa_module.hpp"

namespace qualmix {

struct HeadShape {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t positions = 0;  // T_max
  std::size_t vocab = 0;

  std::size_t output_dim() const { return positions * vocab; }
  friend bool operator==(const HeadShape&, const HeadShape&) = default;
};

// Flat layout W_in (H x in) | b_in (H) | W_out (T*V x H) | b_out (T*V).
// Also used as the gradient accumulator.
class SurrogateHead {
 public:
  SurrogateHead() = default;
  explicit SurrogateHead(HeadShape shape);  // all zeros

  // W_in ~ U(+-1/sqrt(in)); the output layer starts at zero so the
  // untrained head emits uniform logits.
  static SurrogateHead initialize(HeadShape shape, std::uint64_t seed);

  const HeadShape& shape() const { return shape_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  MatRef w_in() { return {values_.data(), shape_.hidden, shape_.input}; }
  ConstMatRef w_in() const { return {values_.data(), shape_.hidden, shape_.input}; }
  std::span<double> b_in() { return {values_.data() + off_b_in(), shape_.hidden}; }
  std::span<const double> b_in() const { return {values_.data() + off_b_in(), shape_.hidden}; }
  MatRef w_out() { return {values_.data() + off_w_out(), shape_.output_dim(), shape_.hidden}; }
  ConstMatRef w_out() const {
    return {values_.data() + off_w_out(), shape_.output_dim(), shape_.hidden};
  }
  std::span<double> b_out() { return {values_.data() + off_b_out(), shape_.output_dim()}; }
  std::span<const double> b_out() const {
    return {values_.data() + off_b_out(), shape_.output_dim()};
  }

  friend bool operator==(const SurrogateHead&, const SurrogateHead&) = default;

 private:
  std::size_t off_b_in() const { return shape_.hidden * shape_.input; }
  std::size_t off_w_out() const { return off_b_in() + shape_.hidden; }
  std::size_t off_b_out() const { return off_w_out() + shape_.output_dim() * shape_.hidden; }

  HeadShape shape_;
  std::vector<double> values_;
};

std::string head_checksum(const SurrogateHead& head);

// [h_v; h_a or zeros; h_t_raw].
std::vector<double> head_input(const FeatureSample& sample, int d);

// Writes T*V logits for input x.
void head_logits(const SurrogateHead& head, std::span<const double> x, std::span<double> logits);
std::vector<double> head_logits(const SurrogateHead& head, std::span<const double> x);

// ---- losses ---------------------------------------------------------------

// Mean softmax cross-entropy over rows whose target is not kIgnoreIndex.
// Throws Error "sample has no supervised tokens" when every target is IGNORE,
// and on a shape mismatch or out-of-range target.
double per_sample_loss(ConstMatRef logits, std::span<const int> targets);

// Same value; writes d loss / d logits into grad (T x V, overwritten).
double per_sample_loss_grad(ConstMatRef logits, std::span<const int> targets, MatRef grad);

// (1/B) * sum_i w_i * per_sample[i]. Throws Error on a length mismatch or a
// negative or non-finite weight.
double weighted_batch_loss(std::span<const double> per_sample, std::span<const double> weights);

struct HeadExample {
  std::vector<double> input;
  std::vector<int> targets;
};

// Batch loss of the head over `batch`; accumulates d loss / d params into
// grad (same shape as head). Samples with zero weight are skipped in the
// backward pass, so they contribute exactly nothing to grad.
double weighted_batch_loss_grad(const SurrogateHead& head, std::span<const HeadExample> batch,
                                std::span<const double> weights, SurrogateHead& grad);

// ---- stage 1 --------------------------------------------------------------

struct HeadConfig {
  std::size_t hidden = 0;  // 0 selects 2d
  std::size_t steps = 1500;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool use_originals = true;
  bool use_augmented = true;
  // Fraction of originals (per polarity) visible to training.
  double original_fraction = 1.0;

  void validate() const;  // throws ConfigError
};

struct TrainRun {
  HeadConfig config;
  std::string weight_source;  // "uniform" or the weight file's scorer checksum
  SurrogateHead head;
  std::vector<double> loss_trace;
};

// Minibatch Adam on the weighted batch loss. `weights` == nullptr selects
// uniform mode (every weight 1). Throws Error when the weight file was
// exported for another corpus or a sampled id has no weight.
TrainRun train_stage1(const Corpus& corpus, const WeightFile* weights, const HeadConfig& config);

// ---- prediction -----------------------------------------------------------

// Argmax token per position, ties to the lowest index.
std::vector<int> predict_tokens(const SurrogateHead& head, std::span<const double> x);

// Decodes the polarity and intensity positions through the verbalizer.
double predict(const SurrogateHead& head, const FeatureSample& sample, const CorpusHeader& header);

// Predictions aligned with corpus order; threads > 1 shards the samples.
std::vector<double> predict_corpus(const SurrogateHead& head, const Corpus& corpus,
                                   std::size_t threads = 1);

// ---- artifacts ------------------------------------------------------------

struct HeadSnapshot {
  CorpusHeader header;
  SurrogateHead head;
};

std::string serialize_head_snapshot(const HeadSnapshot& snapshot);
HeadSnapshot parse_head_snapshot(std::string_view text);
void save_head_snapshot(const HeadSnapshot& snapshot, const std::filesystem::path& path);
HeadSnapshot load_head_snapshot(const std::filesystem::path& path);

// One {"step":k,"loss":x} object per line.
std::string serialize_run_log(std::span<const double> loss_trace);

}  // namespace qualmix
