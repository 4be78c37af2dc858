// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/qa_module.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <thread>

#include "qualmix/checksum.hpp"
#include "qualmix/error.hpp"
#include "qualmix/json_io.hpp"
#include "qualmix/log.hpp"
#include "qualmix/rng.hpp"

namespace qualmix {

using json_io::Json;

// ---------------------------------------------------------------------------
// Parameters

QaParams::QaParams(QaShape shape) : shape_(shape) {
  if (shape.d == 0 || shape.d_t == 0 || shape.hidden == 0) {
    throw ConfigError("scorer shape must be positive in every dimension");
  }
  values_.assign(off_b2() + 1, 0.0);
}

QaParams QaParams::initialize(QaShape shape, std::uint64_t seed) {
  QaParams p(shape);
  Rng rng = Rng::stream(seed, "qa-init", 0);
  const double text_bound = 1.0 / std::sqrt(static_cast<double>(shape.d_t));
  for (double& w : p.text_weight().flat()) w = rng.uniform(-text_bound, text_bound);
  const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(shape.input_dim()));
  for (double& w : p.w1().flat()) w = rng.uniform(-hidden_bound, hidden_bound);
  return p;
}

std::string qa_checksum(const QaParams& params) {
  Sha256 sha;
  sha.str("qualmix-qa/1")
      .u64(params.shape().d)
      .u64(params.shape().d_t)
      .u64(params.shape().hidden)
      .f64s(params.values());
  return sha.hex();
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

void check_item(const QaItem& item, const QaShape& shape) {
  if (item.h_v.size() != shape.d || item.h_a.size() != shape.d ||
      item.h_t_raw.size() != shape.d_t) {
    throw Error("scorer input: dim mismatch");
  }
  if (item.polarity != 0 && item.polarity != 1) throw Error("scorer input: polarity must be 0 or 1");
}

// Scratch for one forward/backward pass.
struct Workspace {
  std::vector<double> x, pre, act, dpre, dx;

  explicit Workspace(const QaShape& s)
      : x(s.input_dim()), pre(s.hidden), act(s.hidden), dpre(s.hidden), dx(s.input_dim()) {}
};

double forward(const QaItem& item, const QaParams& params, Workspace& ws) {
  assemble_input(item, params, ws.x);
  gemv(params.w1(), ws.x, params.b1(), ws.pre);
  for (std::size_t h = 0; h < ws.pre.size(); ++h) ws.act[h] = gelu(ws.pre[h]);
  return dot(params.w2(), ws.act) + params.b2();
}

// Backpropagates `g` = d loss / d logit through one item whose forward
// state is in ws. Inputs receive no gradient.
void backward(const QaItem& item, const QaParams& params, double g, Workspace& ws,
              QaParams& grad) {
  const QaShape& s = params.shape();
  grad.b2() += g;
  axpy(g, ws.act, grad.w2());
  const auto w2 = params.w2();
  for (std::size_t h = 0; h < s.hidden; ++h) ws.dpre[h] = g * w2[h] * gelu_derivative(ws.pre[h]);
  ger(grad.w1(), ws.dpre, ws.x);
  axpy(1.0, ws.dpre, grad.b1());

  std::fill(ws.dx.begin(), ws.dx.end(), 0.0);
  gemv_t_acc(params.w1(), ws.dpre, ws.dx);
  const std::span<const double> dtext(ws.dx.data() + 2 * s.d, s.d);
  const std::span<const double> dpol(ws.dx.data() + 3 * s.d, s.d);
  ger(grad.text_weight(), dtext, item.h_t_raw);
  axpy(1.0, dtext, grad.text_bias());
  axpy(1.0, dpol, grad.embedding().row(static_cast<std::size_t>(item.polarity)));
}

}  // namespace

void assemble_input(const QaItem& item, const QaParams& params, std::span<double> x) {
  const QaShape& s = params.shape();
  check_item(item, s);
  if (x.size() != s.input_dim()) throw Error("scorer input: output buffer has wrong size");
  std::copy(item.h_v.begin(), item.h_v.end(), x.begin());
  std::copy(item.h_a.begin(), item.h_a.end(), x.begin() + static_cast<std::ptrdiff_t>(s.d));
  gemv(params.text_weight(), item.h_t_raw, params.text_bias(), x.subspan(2 * s.d, s.d));
  const auto emb = params.embedding().row(static_cast<std::size_t>(item.polarity));
  std::copy(emb.begin(), emb.end(), x.begin() + static_cast<std::ptrdiff_t>(3 * s.d));
}

std::vector<double> assemble_input(const QaItem& item, const QaParams& params) {
  std::vector<double> x(params.shape().input_dim());
  assemble_input(item, params, x);
  return x;
}

double qa_logit(std::span<const double> x, const QaParams& params) {
  const QaShape& s = params.shape();
  if (x.size() != s.input_dim()) throw Error("qa_logit: input must have 4d entries");
  std::vector<double> pre(s.hidden);
  gemv(params.w1(), x, params.b1(), pre);
  for (double& v : pre) v = gelu(v);
  return dot(params.w2(), pre) + params.b2();
}

double qa_score(const QaItem& item, const QaParams& params) {
  Workspace ws(params.shape());
  return sigmoid(forward(item, params, ws));
}

// ---------------------------------------------------------------------------
// Objective

namespace {

constexpr std::array<Family, kFamilyCount> kFamilies{Family::kPos, Family::kMix, Family::kMask,
                                                     Family::kFlip};

double active_alpha_sum(const ForgedBatch& forged, const FamilyWeights& alpha) {
  bool any = false;
  double sum = 0.0;
  for (Family f : kFamilies) {
    const auto k = static_cast<std::size_t>(f);
    if (!(alpha[k] >= 0.0) || !std::isfinite(alpha[k])) {
      throw ConfigError("family weights must be finite and non-negative");
    }
    if (forged.family(f).empty()) continue;
    any = true;
    sum += alpha[k];
  }
  if (!any) throw Error("qa_loss: every sample family is empty");
  if (!(sum > 0.0)) throw Error("qa_loss: every non-empty family has zero weight");
  return sum;
}

double loss_impl(const ForgedBatch& forged, const QaParams& params, const FamilyWeights& alpha,
                 QaParams* grad) {
  const double norm = active_alpha_sum(forged, alpha);
  Workspace ws(params.shape());
  double total = 0.0;
  for (Family f : kFamilies) {
    const auto& items = forged.family(f);
    const double a = alpha[static_cast<std::size_t>(f)];
    if (items.empty() || a == 0.0) continue;
    const int label = family_label(f);
    const double coeff = a / (norm * static_cast<double>(items.size()));
    double family_sum = 0.0;
    for (const ForgedItem& it : items) {
      const double logit = forward(it.item, params, ws);
      family_sum += bce_with_logit(logit, label);
      if (grad != nullptr) {
        backward(it.item, params, coeff * (sigmoid(logit) - label), ws, *grad);
      }
    }
    total += a * (family_sum / static_cast<double>(items.size()));
  }
  return total / norm;
}

}  // namespace

double qa_loss(const ForgedBatch& forged, const QaParams& params, const FamilyWeights& alpha) {
  return loss_impl(forged, params, alpha, nullptr);
}

double qa_loss_grad(const ForgedBatch& forged, const QaParams& params,
                    const FamilyWeights& alpha, QaParams& grad) {
  if (!(grad.shape() == params.shape())) throw Error("qa_loss_grad: gradient shape mismatch");
  return loss_impl(forged, params, alpha, &grad);
}

// ---------------------------------------------------------------------------
// Stage 0

void QaConfig::validate() const {
  double sum = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("qa.alpha entries must be non-negative");
    sum += a;
  }
  if (!(sum > 0.0)) throw ConfigError("qa.alpha must not be all zero");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("qa.rho must be in [0, 1]");
  if (batch_size < 2) throw ConfigError("qa.batch_size must be at least 2");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("qa.lr must be positive");
  if (!(original_fraction > 0.0 && original_fraction <= 1.0)) {
    throw ConfigError("qa.original_fraction must be in (0, 1]");
  }
}

Stage0Result train_stage0(const Corpus& corpus, const QaConfig& config) {
  config.validate();
  const CorpusHeader& h = corpus.header();
  const QaShape shape{static_cast<std::size_t>(h.d), static_cast<std::size_t>(h.d_t),
                      config.hidden != 0 ? config.hidden : 2 * static_cast<std::size_t>(h.d)};

  const std::vector<bool> visible = select_originals(corpus, config.original_fraction);
  std::vector<QaItem> pool;
  bool seen[2] = {false, false};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const FeatureSample& s = corpus[i];
    if (!visible[i]) continue;
    if (s.origin == Origin::kAugmented && !config.positives_include_augmented) continue;
    pool.push_back(make_qa_item(s, h.d));
    seen[s.polarity] = true;
  }
  if (!seen[0] || !seen[1]) throw Error("stage0: training pool needs both polarities");

  Stage0Result result{QaParams::initialize(shape, config.seed), {}};
  result.loss_trace.reserve(config.steps);
  AdamState adam(AdamConfig{config.lr, 0.9, 0.999, 1e-8}, result.params.size());
  QaParams grad(shape);

  std::vector<std::size_t> order(pool.size());
  std::size_t cursor = order.size();
  std::uint64_t epoch = 0;
  std::vector<QaItem> batch;
  batch.reserve(config.batch_size);

  for (std::size_t step = 0; step < config.steps; ++step) {
    batch.clear();
    while (batch.size() < config.batch_size) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng = Rng::stream(config.seed, "qa-epoch", epoch++);
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      batch.push_back(pool[order[cursor++]]);
    }
    Rng forge_rng = Rng::stream(config.seed, "qa-forge", step);
    const ForgedBatch forged = forge_batch(batch, config.rho, forge_rng);

    std::fill(grad.values().begin(), grad.values().end(), 0.0);
    const double loss = qa_loss_grad(forged, result.params, config.alpha, grad);
    adam_step(result.params.values(), grad.values(), adam);
    result.loss_trace.push_back(loss);
  }
  if (!all_finite(result.params.values())) throw Error("stage0: parameters diverged");
  return result;
}

// ---------------------------------------------------------------------------
// Scoring and weights

std::vector<double> score_corpus(const Corpus& corpus, const QaParams& params,
                                 std::size_t threads) {
  const QaShape& s = params.shape();
  if (static_cast<std::size_t>(corpus.header().d) != s.d ||
      static_cast<std::size_t>(corpus.header().d_t) != s.d_t) {
    throw Error("score: corpus dims do not match the scorer (dim mismatch)");
  }
  std::vector<double> scores(corpus.size());
  auto shard = [&](std::size_t begin, std::size_t end) {
    Workspace ws(s);
    for (std::size_t i = begin; i < end; ++i) {
      scores[i] = sigmoid(forward(make_qa_item(corpus[i], corpus.header().d), params, ws));
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, corpus.size()));
  if (threads == 1) {
    shard(0, corpus.size());
    return scores;
  }
  std::vector<std::jthread> workers;
  const std::size_t chunk = (corpus.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(corpus.size(), begin + chunk);
    if (begin < end) workers.emplace_back(shard, begin, end);
  }
  return (workers.clear(), scores);
}

void WeightMapConfig::validate() const {
  if (!std::isfinite(w_min) || !std::isfinite(w_max) || w_min < 0.0) {
    throw ConfigError("weights: w_min must be finite and non-negative");
  }
  if (w_min > w_max) throw ConfigError("weights: w_min must not exceed w_max");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("weights: gamma must be positive");
}

double map_weight(double score, const WeightMapConfig& cfg) {
  cfg.validate();
  if (!(score >= 0.0 && score <= 1.0)) throw Error("map_weight: score must lie in [0, 1]");
  return cfg.w_min + std::pow(score, cfg.gamma) * (cfg.w_max - cfg.w_min);
}

double sample_weight(double score, Origin origin, const WeightMapConfig& cfg) {
  if (origin == Origin::kOriginal) {
    cfg.validate();
    return 1.0;
  }
  return map_weight(score, cfg);
}

std::optional<double> WeightFile::weight_of(std::string_view id) const {
  const auto it = std::lower_bound(entries.begin(), entries.end(), id,
                                   [](const WeightEntry& e, std::string_view key) { return e.id < key; });
  if (it == entries.end() || it->id != id) return std::nullopt;
  return it->weight;
}

namespace {

// SOURCE_DATE_EPOCH keeps exports byte-reproducible; without it the stamp
// is the Unix epoch.
std::string creation_stamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != nullptr && *end == '\0' && v >= 0) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

WeightFile build_weight_file(const Corpus& corpus, const QaParams& params,
                             const WeightMapConfig& cfg) {
  cfg.validate();
  const std::vector<double> scores = score_corpus(corpus, params);
  WeightFile file;
  file.map = cfg;
  file.qa_checksum = qa_checksum(params);
  file.corpus_checksum = corpus_checksum(corpus);
  file.created_at = creation_stamp();
  file.entries.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const FeatureSample& s = corpus[i];
    file.entries.push_back({s.id, scores[i], sample_weight(scores[i], s.origin, cfg), s.origin});
  }
  std::sort(file.entries.begin(), file.entries.end(),
            [](const WeightEntry& a, const WeightEntry& b) { return a.id < b.id; });
  return file;
}

std::string serialize_weight_file(const WeightFile& file) {
  // Keys in sorted order at every level; one entry per line.
  std::string out = "{\"entries\":[\n";
  for (std::size_t i = 0; i < file.entries.size(); ++i) {
    const WeightEntry& e = file.entries[i];
    out += "{\"id\":";
    json_io::append_string(out, e.id);
    out += ",\"origin\":\"";
    out += origin_name(e.origin);
    out += "\",\"score\":";
    json_io::append_fixed17(out, e.score);
    out += ",\"weight\":";
    json_io::append_fixed17(out, e.weight);
    out += i + 1 < file.entries.size() ? "},\n" : "}\n";
  }
  out += "],\n\"metadata\":{\"corpus_checksum\":";
  json_io::append_string(out, file.corpus_checksum);
  out += ",\"created_at\":";
  json_io::append_string(out, file.created_at);
  out += ",\"gamma\":";
  json_io::append_fixed17(out, file.map.gamma);
  out += ",\"qa_checksum\":";
  json_io::append_string(out, file.qa_checksum);
  out += ",\"w_max\":";
  json_io::append_fixed17(out, file.map.w_max);
  out += ",\"w_min\":";
  json_io::append_fixed17(out, file.map.w_min);
  out += "},\n\"version\":1}\n";
  return out;
}

WeightFile parse_weight_file(std::string_view text) {
  const std::string what = "weight file";
  const Json j = json_io::parse(text, what);
  try {
    if (json_io::integer(json_io::field(j, "version", what), what) != 1) {
      throw Error(what + ": unsupported version");
    }
    WeightFile file;
    const Json& meta = json_io::field(j, "metadata", what);
    file.corpus_checksum = json_io::field(meta, "corpus_checksum", what).get<std::string>();
    file.qa_checksum = json_io::field(meta, "qa_checksum", what).get<std::string>();
    file.created_at = json_io::field(meta, "created_at", what).get<std::string>();
    file.map.w_min = json_io::number(json_io::field(meta, "w_min", what), what);
    file.map.w_max = json_io::number(json_io::field(meta, "w_max", what), what);
    file.map.gamma = json_io::number(json_io::field(meta, "gamma", what), what);
    for (const Json& e : json_io::field(j, "entries", what)) {
      WeightEntry entry;
      entry.id = json_io::field(e, "id", what).get<std::string>();
      entry.score = json_io::number(json_io::field(e, "score", what), what);
      entry.weight = json_io::number(json_io::field(e, "weight", what), what);
      const std::string origin = json_io::field(e, "origin", what).get<std::string>();
      if (origin != "original" && origin != "augmented") throw Error(what + ": unknown origin");
      entry.origin = origin == "original" ? Origin::kOriginal : Origin::kAugmented;
      if (!file.entries.empty() && !(file.entries.back().id < entry.id)) {
        throw Error(what + ": entries must be sorted by id without duplicates");
      }
      file.entries.push_back(std::move(entry));
    }
    return file;
  } catch (const Json::exception& e) {
    throw Error(what + ": " + e.what());
  }
}

WeightFile load_weight_file(const std::filesystem::path& path) {
  return parse_weight_file(json_io::read_file(path));
}

WeightFile export_weights(const Corpus& corpus, const QaParams& params,
                          const WeightMapConfig& cfg, const std::filesystem::path& path) {
  WeightFile file = build_weight_file(corpus, params, cfg);
  json_io::write_file(path, serialize_weight_file(file));
  return file;
}

// ---------------------------------------------------------------------------
// Snapshots

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
  const std::string what = "snapshot array " + std::string(name);
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

std::string serialize_qa_snapshot(const QaSnapshot& snap) {
  const QaParams& p = snap.params;
  const QaShape& s = p.shape();
  std::string out = "{\"format\":\"qualmix-qa/1\",\n\"header\":";
  out += serialize_corpus_header(snap.header);
  out += ",\n\"hidden\":" + std::to_string(s.hidden) + ",\n\"arrays\":{\n";
  append_named(out, "W_t", s.d, s.d_t, p.text_weight().flat(), false);
  append_named(out, "b_t", 1, s.d, p.text_bias(), false);
  append_named(out, "Emb", 2, s.d, p.embedding().flat(), false);
  append_named(out, "W_1", s.hidden, s.input_dim(), p.w1().flat(), false);
  append_named(out, "b_1", 1, s.hidden, p.b1(), false);
  append_named(out, "w_2", 1, s.hidden, p.w2(), false);
  const double b2 = p.b2();
  append_named(out, "b_2", 1, 1, std::span<const double>(&b2, 1), true);
  out += "}}\n";
  return out;
}

QaSnapshot parse_qa_snapshot(std::string_view text) {
  const std::string what = "qa snapshot";
  const Json j = json_io::parse(text, what);
  try {
    if (json_io::field(j, "format", what).get<std::string>() != "qualmix-qa/1") {
      throw Error(what + ": unsupported format");
    }
    QaSnapshot snap;
    snap.header = parse_corpus_header(json_io::field(j, "header", what).dump());
    const auto hidden = static_cast<std::size_t>(json_io::integer(json_io::field(j, "hidden", what), what));
    const QaShape s{static_cast<std::size_t>(snap.header.d), static_cast<std::size_t>(snap.header.d_t),
                    hidden};
    snap.params = QaParams(s);
    QaParams& p = snap.params;
    const Json& arrays = json_io::field(j, "arrays", what);
    read_named(arrays, "W_t", s.d, s.d_t, p.text_weight().flat());
    read_named(arrays, "b_t", 1, s.d, p.text_bias());
    read_named(arrays, "Emb", 2, s.d, p.embedding().flat());
    read_named(arrays, "W_1", s.hidden, s.input_dim(), p.w1().flat());
    read_named(arrays, "b_1", 1, s.hidden, p.b1());
    read_named(arrays, "w_2", 1, s.hidden, p.w2());
    read_named(arrays, "b_2", 1, 1, std::span<double>(&p.b2(), 1));
    return snap;
  } catch (const Json::exception& e) {
    throw Error(what + ": " + e.what());
  }
}

void save_qa_snapshot(const QaSnapshot& snapshot, const std::filesystem::path& path) {
  json_io::write_file(path, serialize_qa_snapshot(snapshot));
}

QaSnapshot load_qa_snapshot(const std::filesystem::path& path) {
  return parse_qa_snapshot(json_io::read_file(path));
}

}  // namespace qualmix
