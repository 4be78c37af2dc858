// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>

#include "qualmix/checksum.hpp"
#include "qualmix/error.hpp"
#include "qualmix/json_io.hpp"
#include "qualmix/numerics.hpp"
#include "qualmix/rng.hpp"

namespace qualmix {

using json_io::Json;

std::string_view origin_name(Origin origin) {
  return origin == Origin::kOriginal ? "original" : "augmented";
}

int derive_polarity(double y) {
  if (!(y >= -1.0 && y <= 1.0)) {
    throw Error("sentiment " + std::to_string(y) + " outside [-1, 1]");
  }
  return y >= 0.0 ? 1 : 0;
}

int sentiment_bin(double y, int k) {
  if (k < 2) throw Error("sentiment_bin: need at least two classes");
  if (k == 2) return derive_polarity(y);
  if (!(y >= -1.0 && y <= 1.0)) {
    throw Error("sentiment " + std::to_string(y) + " outside [-1, 1]");
  }
  const auto bin = static_cast<int>(std::floor((y + 1.0) / 2.0 * k));
  return std::clamp(bin, 0, k - 1);
}

int Verbalizer::min_vocab() const {
  return std::max({negative_token, positive_token, first_bin_token + kBins - 1, eos_token}) + 1;
}

std::vector<int> Verbalizer::encode(double sentiment) const {
  const int polarity_token = derive_polarity(sentiment) == 1 ? positive_token : negative_token;
  return {polarity_token, first_bin_token + sentiment_bin(sentiment, kBins), eos_token,
          kIgnoreIndex};
}

double Verbalizer::decode(int polarity_token, int bin_token) const {
  const double sign = polarity_token == positive_token ? 1.0 : -1.0;
  const int bin = bin_token - first_bin_token;
  double magnitude = 0.1;
  if (bin >= 0 && bin < kBins && bin != kBins / 2) {
    const double center = -1.0 + (2.0 * bin + 1.0) / kBins;
    magnitude = std::abs(center);
  }
  return sign * magnitude;
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(CorpusHeader header, std::vector<FeatureSample> samples)
    : header_(std::move(header)), samples_(std::move(samples)) {
  if (header_.d < 1 || header_.d_t < 1 || header_.vocab_size < 1) {
    throw Error("corpus header: d, d_t and vocab_size must be positive");
  }
  if (header_.verbalizer.min_vocab() > header_.vocab_size) {
    throw Error("corpus header: verbalizer tokens exceed vocab_size");
  }
  const auto d = static_cast<std::size_t>(header_.d);
  const auto d_t = static_cast<std::size_t>(header_.d_t);
  index_.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const FeatureSample& s = samples_[i];
    const std::string where = "record " + s.id;
    if (s.id.empty()) throw Error("record #" + std::to_string(i) + ": empty id");
    if (!index_.emplace(s.id, i).second) throw Error("duplicate id '" + s.id + "'");
    if (s.h_v.size() != d || s.h_t_raw.size() != d_t || (s.h_a && s.h_a->size() != d)) {
      throw Error(where + ": dim mismatch");
    }
    if (!all_finite(s.h_v) || !all_finite(s.h_t_raw) || (s.h_a && !all_finite(*s.h_a))) {
      throw Error(where + ": non-finite feature value");
    }
    if (!(s.sentiment >= -1.0 && s.sentiment <= 1.0)) {
      throw Error(where + ": sentiment outside [-1, 1]");
    }
    if (s.polarity != derive_polarity(s.sentiment)) {
      throw Error(where + ": polarity disagrees with sentiment sign");
    }
    if (s.origin == Origin::kOriginal && s.parent_id) {
      throw Error(where + ": original sample must not have a parent_id");
    }
    if (s.origin == Origin::kAugmented && !s.parent_id) {
      throw Error(where + ": augmented sample needs a parent_id");
    }
    if (s.hidden_quality && !(*s.hidden_quality >= 0.0 && *s.hidden_quality <= 1.0)) {
      throw Error(where + ": hidden_quality outside [0, 1]");
    }
    for (int t : s.target_tokens) {
      if (t != kIgnoreIndex && (t < 0 || t >= header_.vocab_size)) {
        throw Error(where + ": target token " + std::to_string(t) + " outside vocabulary");
      }
    }
  }
  for (const FeatureSample& s : samples_) {
    if (s.parent_id && !index_.contains(*s.parent_id)) {
      throw Error("record " + s.id + ": unknown parent '" + *s.parent_id + "'");
    }
  }
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Corpus::count(Origin origin) const {
  return static_cast<std::size_t>(std::count_if(
      samples_.begin(), samples_.end(), [&](const FeatureSample& s) { return s.origin == origin; }));
}

// ---------------------------------------------------------------------------
// Configuration

CorruptionProfile CorruptionProfile::clean() {
  CorruptionProfile p;
  p.p_swap = 0.0;
  p.p_degrade = 0.0;
  p.p_label_noise = 0.0;
  return p;
}

void CorruptionProfile::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("profile.") + name + " must be in [0, 1]");
  };
  prob(p_swap, "p_swap");
  prob(p_degrade, "p_degrade");
  prob(degrade_mask_rate, "degrade_mask_rate");
  prob(p_label_noise, "p_label_noise");
  prob(p_missing_audio, "p_missing_audio");
  if (!(sigma_benign >= 0.0 && sigma_benign <= 1.0)) {
    throw ConfigError("profile.sigma_benign must be in [0, 1]");
  }
  if (p_swap + p_degrade + p_label_noise > 1.0 + 1e-12) {
    throw ConfigError("profile: corruption probabilities must sum to at most 1");
  }
}

void GeneratorConfig::validate() const {
  profile.validate();
  if (d < 4 || d_t < 4) throw ConfigError("corpus dimensions must be at least 4");
  if (vocab_size < Verbalizer{}.min_vocab()) {
    throw ConfigError("vocab_size must be at least " + std::to_string(Verbalizer{}.min_vocab()));
  }
  const bool finite_latent = std::isfinite(latent.base_scale) && std::isfinite(latent.signal) &&
                             std::isfinite(latent.cluster_offset) && std::isfinite(latent.noise) &&
                             std::isfinite(latent.nuisance_scale);
  if (!finite_latent || latent.noise < 0.0 || latent.nuisance_scale < 0.0) {
    throw ConfigError("latent model parameters invalid");
  }
  if (latent.nuisance_rank > static_cast<std::size_t>(std::min(d, d_t))) {
    throw ConfigError("latent.nuisance_rank must not exceed the feature dimension");
  }
}

// ---------------------------------------------------------------------------
// Generator

namespace {

struct Modality {
  std::vector<double> base;
  std::vector<double> direction;  // unit length
  Matrix nuisance;                // dim x rank, unit-length columns
};

struct LatentModel {
  Modality visual, audio, text;
};

void normalize(std::vector<double>& v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
}

Modality make_modality(Rng& rng, std::size_t dim, const LatentModelConfig& cfg) {
  Modality m{std::vector<double>(dim), std::vector<double>(dim), Matrix(dim, cfg.nuisance_rank)};
  for (double& b : m.base) b = cfg.base_scale * rng.normal();
  for (double& u : m.direction) u = rng.normal();
  normalize(m.direction);
  std::vector<double> column(dim);
  for (std::size_t k = 0; k < cfg.nuisance_rank; ++k) {
    for (double& x : column) x = rng.normal();
    normalize(column);
    for (std::size_t j = 0; j < dim; ++j) m.nuisance(j, k) = column[j];
  }
  return m;
}

double signal_coordinate(const LatentModelConfig& cfg, double y) {
  const double sign = derive_polarity(y) == 1 ? 1.0 : -1.0;
  return cfg.signal * (sign * cfg.cluster_offset + y);
}

// Nuisance factors of one sample, shared by all of its modalities.
std::vector<double> draw_factors(const LatentModelConfig& cfg, Rng& rng) {
  std::vector<double> z(cfg.nuisance_rank);
  for (double& x : z) x = cfg.nuisance_scale * rng.normal();
  return z;
}

// Sentiment-independent part of a feature: A_m z plus isotropic noise.
std::vector<double> draw_residual(const Modality& m, const LatentModelConfig& cfg,
                                  std::span<const double> z, Rng& rng) {
  std::vector<double> r(m.base.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += z[k] * m.nuisance(j, k);
  }
  for (double& x : r) x += cfg.noise * rng.normal();
  return r;
}

std::vector<double> draw_feature(const Modality& m, const LatentModelConfig& cfg, double y,
                                 std::span<const double> z, Rng& rng) {
  const double s = signal_coordinate(cfg, y);
  std::vector<double> h = draw_residual(m, cfg, z, rng);
  for (std::size_t j = 0; j < h.size(); ++j) h[j] += m.base[j] + s * m.direction[j];
  return h;
}

void shift_along(std::vector<double>& h, const Modality& m, double delta) {
  for (std::size_t j = 0; j < h.size(); ++j) h[j] += delta * m.direction[j];
}

// Replaces a fraction of the residual around the latent mean with a fresh
// draw built on the factors z, preserving the residual distribution:
//   h' = mu + sqrt(1 - sigma^2) * (h - mu) + sigma * fresh_residual.
void rejitter(std::vector<double>& h, const Modality& m, const LatentModelConfig& cfg,
              double signal, double sigma, std::span<const double> z, Rng& rng) {
  const double keep = std::sqrt(1.0 - sigma * sigma);
  const std::vector<double> fresh = draw_residual(m, cfg, z, rng);
  for (std::size_t j = 0; j < h.size(); ++j) {
    const double mu = m.base[j] + signal * m.direction[j];
    h[j] = mu + keep * (h[j] - mu) + sigma * fresh[j];
  }
}

std::string original_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%06zu", i);
  return buf;
}

enum class AugmentKind { kBenign, kSwap, kDegrade, kDrift };

AugmentKind pick_kind(const CorruptionProfile& p, double u) {
  if (u < p.p_swap) return AugmentKind::kSwap;
  if (u < p.p_swap + p.p_degrade) return AugmentKind::kDegrade;
  if (u < p.p_swap + p.p_degrade + p.p_label_noise) return AugmentKind::kDrift;
  return AugmentKind::kBenign;
}

// Zeroes each coordinate independently with probability `rate`. The uniform
// draw per coordinate is taken regardless of the rate so a larger rate
// always zeroes a superset of coordinates. Returns the count zeroed.
std::size_t degrade(std::vector<double>& h, double rate, Rng& rng) {
  std::size_t zeroed = 0;
  for (double& x : h) {
    if (rng.uniform() < rate) {
      x = 0.0;
      ++zeroed;
    }
  }
  return zeroed;
}

}  // namespace

Corpus generate_corpus(const GeneratorConfig& config) {
  config.validate();
  if (config.n_originals < 2) throw Error("cannot generate corpus: need both polarities");

  const auto d = static_cast<std::size_t>(config.d);
  const auto d_t = static_cast<std::size_t>(config.d_t);
  const LatentModelConfig& lat = config.latent;
  const CorruptionProfile& prof = config.profile;

  Rng model_rng = Rng::stream(config.seed, "model", 0);
  const LatentModel model{make_modality(model_rng, d, lat), make_modality(model_rng, d, lat),
                          make_modality(model_rng, d_t, lat)};

  CorpusHeader header;
  header.d = config.d;
  header.d_t = config.d_t;
  header.vocab_size = config.vocab_size;
  header.seed = config.seed;
  header.generator_version = std::string(kGeneratorVersion);

  const std::size_t n = config.n_originals;
  const std::size_t k = config.augments_per_original;
  std::vector<FeatureSample> samples;
  samples.reserve(n * (1 + k));

  std::vector<std::size_t> by_polarity[2];
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(config.seed, "original", i);
    const int p = i % 2 == 0 ? 1 : 0;
    // Negative sentiment lies in [-1, 0) so its polarity is never 1.
    const double y = p == 1 ? rng.uniform() : -(1.0 - rng.uniform());
    FeatureSample s;
    s.id = original_id(i);
    s.sentiment = y;
    s.polarity = p;
    s.origin = Origin::kOriginal;
    const std::vector<double> z = draw_factors(lat, rng);
    s.h_v = draw_feature(model.visual, lat, y, z, rng);
    s.h_a = draw_feature(model.audio, lat, y, z, rng);
    s.h_t_raw = draw_feature(model.text, lat, y, z, rng);
    if (rng.bernoulli(prof.p_missing_audio)) s.h_a.reset();
    s.target_tokens = header.verbalizer.encode(y);
    by_polarity[p].push_back(i);
    samples.push_back(std::move(s));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const FeatureSample& parent = samples[i];
    for (std::size_t j = 0; j < k; ++j) {
      Rng rng = Rng::stream(config.seed, "augment", i * k + j);
      FeatureSample a = parent;
      a.id = parent.id + ".a" + std::to_string(j);
      a.origin = Origin::kAugmented;
      a.parent_id = parent.id;

      switch (pick_kind(prof, rng.uniform())) {
        case AugmentKind::kBenign: {
          const double sc = signal_coordinate(lat, parent.sentiment);
          const std::vector<double> z = draw_factors(lat, rng);
          rejitter(a.h_v, model.visual, lat, sc, prof.sigma_benign, z, rng);
          if (a.h_a) rejitter(*a.h_a, model.audio, lat, sc, prof.sigma_benign, z, rng);
          rejitter(a.h_t_raw, model.text, lat, sc, prof.sigma_benign, z, rng);
          a.hidden_quality = 1.0;
          break;
        }
        case AugmentKind::kSwap: {
          const auto& donors = by_polarity[1 - parent.polarity];
          const FeatureSample& donor = samples[donors[rng.below(donors.size())]];
          const bool swap_audio = rng.bernoulli(0.5);
          if (swap_audio) {
            a.h_a = donor.h_a;
          } else {
            a.h_v = donor.h_v;
          }
          a.hidden_quality = 0.3 * (1.0 - std::abs(parent.sentiment - donor.sentiment) / 2.0);
          break;
        }
        case AugmentKind::kDegrade: {
          std::size_t zeroed = degrade(a.h_v, prof.degrade_mask_rate, rng);
          std::size_t total = a.h_v.size();
          if (a.h_a) {
            zeroed += degrade(*a.h_a, prof.degrade_mask_rate, rng);
            total += a.h_a->size();
          }
          a.hidden_quality =
              0.3 * (1.0 - static_cast<double>(zeroed) / static_cast<double>(total));
          break;
        }
        case AugmentKind::kDrift: {
          // Jittered like a benign augment, then every modality moves to the
          // opposite polarity while the label stays with the parent.
          const double strength = rng.uniform(0.5, 1.0);
          const double target_y = parent.polarity == 1 ? -strength : strength;
          const double from = signal_coordinate(lat, parent.sentiment);
          const double delta = signal_coordinate(lat, target_y) - from;
          const std::vector<double> z = draw_factors(lat, rng);
          rejitter(a.h_v, model.visual, lat, from, prof.sigma_benign, z, rng);
          if (a.h_a) rejitter(*a.h_a, model.audio, lat, from, prof.sigma_benign, z, rng);
          rejitter(a.h_t_raw, model.text, lat, from, prof.sigma_benign, z, rng);
          shift_along(a.h_v, model.visual, delta);
          if (a.h_a) shift_along(*a.h_a, model.audio, delta);
          shift_along(a.h_t_raw, model.text, delta);
          a.hidden_quality = 0.6 * (1.0 - strength);
          break;
        }
      }
      samples.push_back(std::move(a));
    }
  }
  return Corpus(std::move(header), std::move(samples));
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_corpus_header(const CorpusHeader& h) {
  std::string out = "{\"d\":" + std::to_string(h.d) + ",\"d_t\":" + std::to_string(h.d_t) +
                    ",\"vocab_size\":" + std::to_string(h.vocab_size) +
                    ",\"seed\":" + std::to_string(h.seed) + ",\"generator_version\":";
  json_io::append_string(out, h.generator_version);
  const Verbalizer& v = h.verbalizer;
  out += ",\"verbalizer\":{\"negative_token\":" + std::to_string(v.negative_token) +
         ",\"positive_token\":" + std::to_string(v.positive_token) +
         ",\"first_bin_token\":" + std::to_string(v.first_bin_token) +
         ",\"bins\":" + std::to_string(Verbalizer::kBins) +
         ",\"eos_token\":" + std::to_string(v.eos_token) + "}}";
  return out;
}

namespace {

void append_record(std::string& out, const FeatureSample& s) {
  out += "{\"id\":";
  json_io::append_string(out, s.id);
  out += ",\"h_v\":";
  json_io::append_array(out, s.h_v);
  out += ",\"h_a\":";
  if (s.h_a) {
    json_io::append_array(out, *s.h_a);
  } else {
    out += "null";
  }
  out += ",\"h_t_raw\":";
  json_io::append_array(out, s.h_t_raw);
  out += ",\"polarity\":" + std::to_string(s.polarity);
  out += ",\"sentiment\":";
  json_io::append_shortest(out, s.sentiment);
  out += ",\"origin\":\"";
  out += origin_name(s.origin);
  out += "\",\"parent_id\":";
  if (s.parent_id) {
    json_io::append_string(out, *s.parent_id);
  } else {
    out += "null";
  }
  out += ",\"hidden_quality\":";
  if (s.hidden_quality) {
    json_io::append_shortest(out, *s.hidden_quality);
  } else {
    out += "null";
  }
  out += ",\"target_tokens\":[";
  for (std::size_t i = 0; i < s.target_tokens.size(); ++i) {
    if (i != 0) out.push_back(',');
    out += std::to_string(s.target_tokens[i]);
  }
  out += "]}";
}

std::vector<double> parse_vector(const Json& v, const std::string& where) {
  if (!v.is_array()) throw Error(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const Json& x : v) out.push_back(json_io::number(x, where));
  return out;
}

CorpusHeader parse_header(const Json& j) {
  const std::string what = "corpus header";
  CorpusHeader h;
  h.d = static_cast<int>(json_io::integer(json_io::field(j, "d", what), what));
  h.d_t = static_cast<int>(json_io::integer(json_io::field(j, "d_t", what), what));
  h.vocab_size = static_cast<int>(json_io::integer(json_io::field(j, "vocab_size", what), what));
  const Json& seed = json_io::field(j, "seed", what);
  if (!seed.is_number_integer()) throw Error(what + ": seed must be an integer");
  h.seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>()
                                     : static_cast<std::uint64_t>(seed.get<std::int64_t>());
  h.generator_version = json_io::field(j, "generator_version", what).get<std::string>();
  if (const auto it = j.find("verbalizer"); it != j.end()) {
    const std::string vw = what + " verbalizer";
    h.verbalizer.negative_token = static_cast<int>(json_io::integer(json_io::field(*it, "negative_token", vw), vw));
    h.verbalizer.positive_token = static_cast<int>(json_io::integer(json_io::field(*it, "positive_token", vw), vw));
    h.verbalizer.first_bin_token = static_cast<int>(json_io::integer(json_io::field(*it, "first_bin_token", vw), vw));
    h.verbalizer.eos_token = static_cast<int>(json_io::integer(json_io::field(*it, "eos_token", vw), vw));
    if (json_io::integer(json_io::field(*it, "bins", vw), vw) != Verbalizer::kBins) {
      throw Error(vw + ": unsupported bin count");
    }
  }
  return h;
}

FeatureSample parse_record(const Json& j, std::size_t line_no) {
  std::string where = "corpus line " + std::to_string(line_no);
  FeatureSample s;
  const Json& id = json_io::field(j, "id", where);
  if (!id.is_string()) throw Error(where + ": id must be a string");
  s.id = id.get<std::string>();
  where = "record " + s.id;
  s.h_v = parse_vector(json_io::field(j, "h_v", where), where);
  if (const Json& ha = json_io::field(j, "h_a", where); !ha.is_null()) {
    s.h_a = parse_vector(ha, where);
  }
  s.h_t_raw = parse_vector(json_io::field(j, "h_t_raw", where), where);
  s.polarity = static_cast<int>(json_io::integer(json_io::field(j, "polarity", where), where));
  s.sentiment = json_io::number(json_io::field(j, "sentiment", where), where);
  const std::string origin = json_io::field(j, "origin", where).get<std::string>();
  if (origin == "original") {
    s.origin = Origin::kOriginal;
  } else if (origin == "augmented") {
    s.origin = Origin::kAugmented;
  } else {
    throw Error(where + ": unknown origin '" + origin + "'");
  }
  if (const Json& pid = json_io::field(j, "parent_id", where); !pid.is_null()) {
    s.parent_id = pid.get<std::string>();
  }
  if (const Json& hq = json_io::field(j, "hidden_quality", where); !hq.is_null()) {
    s.hidden_quality = json_io::number(hq, where);
  }
  const Json& tokens = json_io::field(j, "target_tokens", where);
  if (!tokens.is_array()) throw Error(where + ": target_tokens must be an array");
  for (const Json& t : tokens) s.target_tokens.push_back(static_cast<int>(json_io::integer(t, where)));
  return s;
}

}  // namespace

std::string serialize_corpus(const Corpus& corpus) {
  std::string out = serialize_corpus_header(corpus.header());
  out.push_back('\n');
  for (const FeatureSample& s : corpus.samples()) {
    append_record(out, s);
    out.push_back('\n');
  }
  return out;
}

Corpus parse_corpus(std::string_view text) {
  std::optional<CorpusHeader> header;
  std::vector<FeatureSample> samples;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const Json j = json_io::parse(line, "corpus line " + std::to_string(line_no));
    try {
      if (!header) {
        header = parse_header(j);
      } else {
        samples.push_back(parse_record(j, line_no));
      }
    } catch (const Json::exception& e) {
      throw Error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) throw Error("corpus: missing header line");
  return Corpus(std::move(*header), std::move(samples));
}

CorpusHeader parse_corpus_header(std::string_view text) {
  const Json j = json_io::parse(text, "corpus header");
  try {
    return parse_header(j);
  } catch (const Json::exception& e) {
    throw Error(std::string("corpus header: ") + e.what());
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  json_io::write_file(path, serialize_corpus(corpus));
}

Corpus load_corpus(const std::filesystem::path& path) {
  return parse_corpus(json_io::read_file(path));
}

std::string corpus_checksum(const Corpus& corpus) {
  const CorpusHeader& h = corpus.header();
  Sha256 sha;
  sha.str("qualmix-corpus/1")
      .u64(static_cast<std::uint64_t>(h.d))
      .u64(static_cast<std::uint64_t>(h.d_t))
      .u64(static_cast<std::uint64_t>(h.vocab_size))
      .u64(h.seed)
      .str(h.generator_version)
      .u64(corpus.size());
  for (const FeatureSample& s : corpus.samples()) {
    sha.str(s.id).f64s(s.h_v).u64(s.h_a ? 1 : 0);
    if (s.h_a) sha.f64s(*s.h_a);
    sha.f64s(s.h_t_raw)
        .u64(static_cast<std::uint64_t>(s.polarity))
        .f64(s.sentiment)
        .u64(s.origin == Origin::kOriginal ? 0 : 1)
        .str(s.parent_id.value_or(""))
        .u64(s.hidden_quality ? 1 : 0)
        .f64(s.hidden_quality.value_or(0.0))
        .u64(s.target_tokens.size());
    for (int t : s.target_tokens) sha.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(t)));
  }
  return sha.hex();
}

std::string feature_checksum(const Corpus& corpus) {
  Sha256 sha;
  sha.str("qualmix-features/1").u64(corpus.size());
  for (const FeatureSample& s : corpus.samples()) {
    sha.f64s(s.h_v).u64(s.h_a ? 1 : 0);
    if (s.h_a) sha.f64s(*s.h_a);
    sha.f64s(s.h_t_raw);
  }
  return sha.hex();
}

namespace {

// Seeded per-polarity permutation of original indices.
std::vector<std::size_t> permuted_originals(const Corpus& corpus, int polarity,
                                            std::string_view tag) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].origin == Origin::kOriginal && corpus[i].polarity == polarity) idx.push_back(i);
  }
  Rng rng = Rng::stream(corpus.header().seed, tag, static_cast<std::uint64_t>(polarity));
  rng.shuffle(std::span<std::size_t>(idx));
  return idx;
}

}  // namespace

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must be in [0, 1)");
  }
  std::vector<bool> in_test(corpus.size(), false);
  for (int p = 0; p < 2; ++p) {
    const auto idx = permuted_originals(corpus, p, "split");
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < n_test; ++i) in_test[idx[i]] = true;
  }
  std::vector<FeatureSample> train, test;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const FeatureSample& s = corpus[i];
    bool test_side = in_test[i];
    if (s.parent_id) test_side = in_test[*corpus.index_of(*s.parent_id)];
    (test_side ? test : train).push_back(s);
  }
  return {Corpus(corpus.header(), std::move(train)), Corpus(corpus.header(), std::move(test))};
}

std::vector<bool> select_originals(const Corpus& corpus, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("original_fraction must be in (0, 1]");
  std::vector<bool> keep(corpus.size(), true);
  if (fraction == 1.0) return keep;
  for (int p = 0; p < 2; ++p) {
    const auto idx = permuted_originals(corpus, p, "subset");
    const auto n_keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size())));
    for (std::size_t i = n_keep; i < idx.size(); ++i) keep[idx[i]] = false;
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (const auto& parent = corpus[i].parent_id) {
      const auto j = corpus.index_of(*parent);
      keep[i] = j.has_value() && keep[*j];
    }
  }
  return keep;
}

}  // namespace qualmix
