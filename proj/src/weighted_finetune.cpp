// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/weighted_finetune.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

#include "qualmix/checksum.hpp"
#include "qualmix/error.hpp"
#include "qualmix/json_io.hpp"
#include "qualmix/rng.hpp"

namespace qualmix {

using json_io::Json;

// ---------------------------------------------------------------------------
// Head

SurrogateHead::SurrogateHead(HeadShape shape) : shape_(shape) {
  if (shape.input == 0 || shape.hidden == 0 || shape.positions == 0 || shape.vocab == 0) {
    throw ConfigError("head shape must be positive in every dimension");
  }
  values_.assign(off_b_out() + shape.output_dim(), 0.0);
}

SurrogateHead SurrogateHead::initialize(HeadShape shape, std::uint64_t seed) {
  SurrogateHead head(shape);
  Rng rng = Rng::stream(seed, "head-init", 0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.input));
  for (double& w : head.w_in().flat()) w = rng.uniform(-bound, bound);
  return head;
}

std::string head_checksum(const SurrogateHead& head) {
  Sha256 sha;
  sha.str("qualmix-head/1")
      .u64(head.shape().input)
      .u64(head.shape().hidden)
      .u64(head.shape().positions)
      .u64(head.shape().vocab)
      .f64s(head.values());
  return sha.hex();
}

std::vector<double> head_input(const FeatureSample& sample, int d) {
  std::vector<double> x;
  x.reserve(2 * static_cast<std::size_t>(d) + sample.h_t_raw.size());
  x.insert(x.end(), sample.h_v.begin(), sample.h_v.end());
  if (sample.h_a) {
    x.insert(x.end(), sample.h_a->begin(), sample.h_a->end());
  } else {
    x.insert(x.end(), static_cast<std::size_t>(d), 0.0);
  }
  x.insert(x.end(), sample.h_t_raw.begin(), sample.h_t_raw.end());
  return x;
}

namespace {

struct Workspace {
  std::vector<double> pre, act, logits, dlogits, dact;

  explicit Workspace(const HeadShape& s)
      : pre(s.hidden), act(s.hidden), logits(s.output_dim()), dlogits(s.output_dim()),
        dact(s.hidden) {}
};

void forward(const SurrogateHead& head, std::span<const double> x, Workspace& ws) {
  if (x.size() != head.shape().input) throw Error("head input: dim mismatch");
  gemv(head.w_in(), x, head.b_in(), ws.pre);
  for (std::size_t h = 0; h < ws.pre.size(); ++h) ws.act[h] = gelu(ws.pre[h]);
  gemv(head.w_out(), ws.act, head.b_out(), ws.logits);
}

ConstMatRef logit_view(const HeadShape& s, const std::vector<double>& logits) {
  return {logits.data(), s.positions, s.vocab};
}

}  // namespace

void head_logits(const SurrogateHead& head, std::span<const double> x, std::span<double> logits) {
  if (logits.size() != head.shape().output_dim()) throw Error("head logits: buffer has wrong size");
  Workspace ws(head.shape());
  forward(head, x, ws);
  std::copy(ws.logits.begin(), ws.logits.end(), logits.begin());
}

std::vector<double> head_logits(const SurrogateHead& head, std::span<const double> x) {
  std::vector<double> out(head.shape().output_dim());
  head_logits(head, x, out);
  return out;
}

// ---------------------------------------------------------------------------
// Losses

namespace {

std::size_t supervised_count(ConstMatRef logits, std::span<const int> targets) {
  if (targets.size() != logits.rows()) throw Error("per_sample_loss: targets and logits disagree on T");
  std::size_t n = 0;
  for (int t : targets) {
    if (t == kIgnoreIndex) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= logits.cols()) {
      throw Error("per_sample_loss: target token out of range");
    }
    ++n;
  }
  if (n == 0) throw Error("sample has no supervised tokens");
  return n;
}

}  // namespace

double per_sample_loss(ConstMatRef logits, std::span<const int> targets) {
  const std::size_t n = supervised_count(logits, targets);
  double sum = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] == kIgnoreIndex) continue;
    sum += softmax_cross_entropy(logits.row(t), static_cast<std::size_t>(targets[t]));
  }
  return sum / static_cast<double>(n);
}

double per_sample_loss_grad(ConstMatRef logits, std::span<const int> targets, MatRef grad) {
  const std::size_t n = supervised_count(logits, targets);
  if (grad.rows() != logits.rows() || grad.cols() != logits.cols()) {
    throw Error("per_sample_loss_grad: gradient shape mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto row = grad.row(t);
    if (targets[t] == kIgnoreIndex) {
      std::fill(row.begin(), row.end(), 0.0);
      continue;
    }
    sum += softmax_cross_entropy_grad(logits.row(t), static_cast<std::size_t>(targets[t]), row);
    for (double& g : row) g *= inv_n;
  }
  return sum * inv_n;
}

namespace {

void check_weights(std::span<const double> weights) {
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("sample weights must be finite and non-negative");
  }
}

}  // namespace

double weighted_batch_loss(std::span<const double> per_sample, std::span<const double> weights) {
  if (per_sample.size() != weights.size()) throw Error("weighted_batch_loss: length mismatch");
  if (per_sample.empty()) throw Error("weighted_batch_loss: empty batch");
  check_weights(weights);
  double sum = 0.0;
  for (std::size_t i = 0; i < per_sample.size(); ++i) sum += weights[i] * per_sample[i];
  return sum / static_cast<double>(per_sample.size());
}

double weighted_batch_loss_grad(const SurrogateHead& head, std::span<const HeadExample> batch,
                                std::span<const double> weights, SurrogateHead& grad) {
  const HeadShape& s = head.shape();
  if (!(grad.shape() == s)) throw Error("weighted_batch_loss_grad: gradient shape mismatch");
  if (batch.size() != weights.size()) throw Error("weighted_batch_loss: length mismatch");
  if (batch.empty()) throw Error("weighted_batch_loss: empty batch");
  check_weights(weights);

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Workspace ws(s);
  std::vector<double> losses(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward(head, batch[i].input, ws);
    const MatRef dl{ws.dlogits.data(), s.positions, s.vocab};
    losses[i] = per_sample_loss_grad(logit_view(s, ws.logits), batch[i].targets, dl);
    if (weights[i] == 0.0) continue;

    const double coeff = weights[i] * inv_b;
    for (double& g : ws.dlogits) g *= coeff;
    axpy(1.0, ws.dlogits, grad.b_out());
    ger(grad.w_out(), ws.dlogits, ws.act);
    std::fill(ws.dact.begin(), ws.dact.end(), 0.0);
    gemv_t_acc(head.w_out(), ws.dlogits, ws.dact);
    for (std::size_t h = 0; h < s.hidden; ++h) ws.dact[h] *= gelu_derivative(ws.pre[h]);
    ger(grad.w_in(), ws.dact, batch[i].input);
    axpy(1.0, ws.dact, grad.b_in());
  }
  return weighted_batch_loss(losses, weights);
}

// ---------------------------------------------------------------------------
// Stage 1

void HeadConfig::validate() const {
  if (steps == 0) throw ConfigError("head.steps must be positive");
  if (batch_size == 0) throw ConfigError("head.batch_size must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("head.lr must be positive");
  if (!use_originals && !use_augmented) {
    throw ConfigError("head must train on originals, augmentations, or both");
  }
  if (!(original_fraction > 0.0 && original_fraction <= 1.0)) {
    throw ConfigError("head.original_fraction must be in (0, 1]");
  }
}

TrainRun train_stage1(const Corpus& corpus, const WeightFile* weights, const HeadConfig& config) {
  config.validate();
  if (weights != nullptr && weights->corpus_checksum != corpus_checksum(corpus)) {
    throw Error("weight file was exported for a different corpus");
  }
  const CorpusHeader& h = corpus.header();
  const HeadShape shape{2 * static_cast<std::size_t>(h.d) + static_cast<std::size_t>(h.d_t),
                        config.hidden != 0 ? config.hidden : 2 * static_cast<std::size_t>(h.d),
                        Verbalizer::kSequenceLength, static_cast<std::size_t>(h.vocab_size)};

  const std::vector<bool> visible = select_originals(corpus, config.original_fraction);
  std::vector<HeadExample> pool;
  std::vector<std::optional<double>> pool_weight;
  std::vector<const std::string*> pool_id;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const FeatureSample& s = corpus[i];
    if (!visible[i]) continue;
    if (s.origin == Origin::kOriginal ? !config.use_originals : !config.use_augmented) continue;
    pool.push_back({head_input(s, h.d), s.target_tokens});
    pool_weight.push_back(weights != nullptr ? weights->weight_of(s.id) : std::optional<double>(1.0));
    pool_id.push_back(&s.id);
  }
  if (pool.empty()) throw Error("stage1: training pool is empty");

  TrainRun run{config, weights != nullptr ? weights->qa_checksum : "uniform",
               SurrogateHead::initialize(shape, config.seed), {}};
  run.loss_trace.reserve(config.steps);
  AdamState adam(AdamConfig{config.lr, 0.9, 0.999, 1e-8}, run.head.values().size());
  SurrogateHead grad(shape);

  std::vector<std::size_t> order(pool.size());
  std::size_t cursor = order.size();
  std::uint64_t epoch = 0;
  const std::size_t b = std::min(config.batch_size, pool.size());
  std::vector<HeadExample> batch(b);
  std::vector<double> batch_weights(b);

  for (std::size_t step = 0; step < config.steps; ++step) {
    for (std::size_t k = 0; k < b; ++k) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng = Rng::stream(config.seed, "head-epoch", epoch++);
        rng.shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      const std::size_t idx = order[cursor++];
      if (!pool_weight[idx]) throw Error("weight file has no entry for sample '" + *pool_id[idx] + "'");
      batch[k] = pool[idx];
      batch_weights[k] = *pool_weight[idx];
    }
    std::fill(grad.values().begin(), grad.values().end(), 0.0);
    const double loss = weighted_batch_loss_grad(run.head, batch, batch_weights, grad);
    adam_step(run.head.values(), grad.values(), adam);
    run.loss_trace.push_back(loss);
  }
  if (!all_finite(run.head.values())) throw Error("stage1: parameters diverged");
  return run;
}

// ---------------------------------------------------------------------------
// Prediction

std::vector<int> predict_tokens(const SurrogateHead& head, std::span<const double> x) {
  const HeadShape& s = head.shape();
  Workspace ws(s);
  forward(head, x, ws);
  std::vector<int> tokens(s.positions);
  for (std::size_t t = 0; t < s.positions; ++t) {
    const auto row = logit_view(s, ws.logits).row(t);
    // max_element returns the first maximum, which is the lowest index.
    tokens[t] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return tokens;
}

double predict(const SurrogateHead& head, const FeatureSample& sample, const CorpusHeader& header) {
  const std::vector<int> tokens = predict_tokens(head, head_input(sample, header.d));
  return header.verbalizer.decode(tokens[Verbalizer::kPolarityPosition],
                                  tokens[Verbalizer::kBinPosition]);
}

std::vector<double> predict_corpus(const SurrogateHead& head, const Corpus& corpus,
                                   std::size_t threads) {
  std::vector<double> out(corpus.size());
  auto shard = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = predict(head, corpus[i], corpus.header());
  };
  threads = std::max<std::size_t>(1, std::min(threads, corpus.size()));
  if (threads == 1) {
    shard(0, corpus.size());
    return out;
  }
  const std::size_t chunk = (corpus.size() + threads - 1) / threads;
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t * chunk < corpus.size(); ++t) {
      workers.emplace_back(shard, t * chunk, std::min(corpus.size(), (t + 1) * chunk));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

void append_named(std::string& out, std::string_view name, std::size_t rows, std::size_t cols,
                  std::span<const double> data, bool last) {
  out += "\"";
  out += name;
  out += "\":{\"shape\":[" + std::to_string(rows) + "," + std::to_string(cols) + "],\"data\":";
  json_io::append_array(out, data);
  out += last ? "}\n" : "},\n";
}

void read_named(const Json& arrays, std::string_view name, std::size_t rows, std::size_t cols,
                std::span<double> dest) {
  const std::string what = "head snapshot array " + std::string(name);
  const Json& a = json_io::field(arrays, name, what);
  const Json& shape = json_io::field(a, "shape", what);
  if (!shape.is_array() || shape.size() != 2 || shape[0].get<std::size_t>() != rows ||
      shape[1].get<std::size_t>() != cols) {
    throw Error(what + ": shape mismatch");
  }
  const Json& data = json_io::field(a, "data", what);
  if (!data.is_array() || data.size() != dest.size()) throw Error(what + ": size mismatch");
  for (std::size_t i = 0; i < dest.size(); ++i) dest[i] = json_io::number(data[i], what);
}

}  // namespace

std::string serialize_head_snapshot(const HeadSnapshot& snap) {
  const SurrogateHead& head = snap.head;
  const HeadShape& s = head.shape();
  std::string out = "{\"format\":\"qualmix-head/1\",\n\"header\":";
  out += serialize_corpus_header(snap.header);
  out += ",\n\"shape\":{\"input\":" + std::to_string(s.input) +
         ",\"hidden\":" + std::to_string(s.hidden) + ",\"positions\":" + std::to_string(s.positions) +
         ",\"vocab\":" + std::to_string(s.vocab) + "},\n\"arrays\":{\n";
  append_named(out, "W_in", s.hidden, s.input, head.w_in().flat(), false);
  append_named(out, "b_in", 1, s.hidden, head.b_in(), false);
  append_named(out, "W_out", s.output_dim(), s.hidden, head.w_out().flat(), false);
  append_named(out, "b_out", 1, s.output_dim(), head.b_out(), true);
  out += "}}\n";
  return out;
}

HeadSnapshot parse_head_snapshot(std::string_view text) {
  const std::string what = "head snapshot";
  const Json j = json_io::parse(text, what);
  try {
    if (json_io::field(j, "format", what).get<std::string>() != "qualmix-head/1") {
      throw Error(what + ": unsupported format");
    }
    HeadSnapshot snap;
    snap.header = parse_corpus_header(json_io::field(j, "header", what).dump());
    const Json& sj = json_io::field(j, "shape", what);
    auto dim = [&](std::string_view key) {
      const auto v = json_io::integer(json_io::field(sj, key, what), what);
      if (v <= 0) throw Error(what + ": shape entries must be positive");
      return static_cast<std::size_t>(v);
    };
    const HeadShape s{dim("input"), dim("hidden"), dim("positions"), dim("vocab")};
    if (s.vocab != static_cast<std::size_t>(snap.header.vocab_size)) {
      throw Error(what + ": vocab does not match the corpus header");
    }
    snap.head = SurrogateHead(s);
    const Json& arrays = json_io::field(j, "arrays", what);
    read_named(arrays, "W_in", s.hidden, s.input, snap.head.w_in().flat());
    read_named(arrays, "b_in", 1, s.hidden, snap.head.b_in());
    read_named(arrays, "W_out", s.output_dim(), s.hidden, snap.head.w_out().flat());
    read_named(arrays, "b_out", 1, s.output_dim(), snap.head.b_out());
    if (!all_finite(snap.head.values())) throw Error(what + ": non-finite parameter");
    return snap;
  } catch (const Json::exception& e) {
    throw Error(what + ": " + e.what());
  }
}

void save_head_snapshot(const HeadSnapshot& snapshot, const std::filesystem::path& path) {
  json_io::write_file(path, serialize_head_snapshot(snapshot));
}

HeadSnapshot load_head_snapshot(const std::filesystem::path& path) {
  return parse_head_snapshot(json_io::read_file(path));
}

std::string serialize_run_log(std::span<const double> loss_trace) {
  std::string out;
  for (std::size_t i = 0; i < loss_trace.size(); ++i) {
    out += "{\"step\":" + std::to_string(i) + ",\"loss\":";
    json_io::append_shortest(out, loss_trace[i]);
    out += "}\n";
  }
  return out;
}

}  // namespace qualmix
