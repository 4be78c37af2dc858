// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include "qualmix/error.hpp"
#include "qualmix/json_io.hpp"
#include "qualmix/log.hpp"
#include "qualmix/metrics.hpp"

namespace qualmix {

using json_io::Json;
using OJson = nlohmann::ordered_json;

namespace {

constexpr std::array<Arm, 4> kAllArms{Arm::kWeighted, Arm::kUniform, Arm::kOriginal,
                                      Arm::kAugmented};

constexpr std::string_view kBinningNote =
    "acc_k bins [-1, 1] into k equal-width classes; acc2 counts y >= 0 as positive";

}  // namespace

std::string_view arm_name(Arm arm) {
  switch (arm) {
    case Arm::kWeighted:
      return "weighted";
    case Arm::kUniform:
      return "uniform";
    case Arm::kOriginal:
      return "original";
    case Arm::kAugmented:
      return "augmented";
  }
  return "weighted";
}

Arm parse_arm(std::string_view name) {
  for (Arm a : kAllArms) {
    if (arm_name(a) == name) return a;
  }
  throw ConfigError("unknown arm '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
  GeneratorConfig gen = corpus;
  gen.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must be in (0, 1)");
  }
  qa.validate();
  weights.validate();
  head.validate();
  if (arms.empty()) throw ConfigError("arms must name at least one arm");
  for (std::size_t i = 0; i < arms.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (arms[i] == arms[j]) throw ConfigError("arms must not repeat");
    }
  }
  if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
  if (!(original_fraction > 0.0 && original_fraction <= 1.0)) {
    throw ConfigError("original_fraction must be in (0, 1]");
  }
  if (threads == 0) throw ConfigError("threads must be positive");
}

namespace {

const char* const kWhat = "pipeline config";

template <typename T>
void read_uint(const Json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  const auto v = json_io::integer(obj.at(key), std::string(kWhat) + "." + key);
  if (v < 0) throw ConfigError(std::string(kWhat) + ": " + key + " must be non-negative");
  out = static_cast<T>(v);
}

void read_int(const Json& obj, const char* key, int& out) {
  if (obj.contains(key)) out = static_cast<int>(json_io::integer(obj.at(key), key));
}

void read_double(const Json& obj, const char* key, double& out) {
  if (obj.contains(key)) out = json_io::number(obj.at(key), key);
}

void read_bool(const Json& obj, const char* key, bool& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_boolean()) throw ConfigError(std::string(kWhat) + ": " + key + " must be a boolean");
  out = obj.at(key).get<bool>();
}

const Json* section(const Json& root, const char* key) {
  if (!root.contains(key)) return nullptr;
  const Json& s = root.at(key);
  if (!s.is_object()) throw ConfigError(std::string(kWhat) + ": " + key + " must be an object");
  return &s;
}

void parse_corpus_section(const Json& s, GeneratorConfig& g) {
  json_io::reject_unknown_keys(
      s, {"n_originals", "augments_per_original", "d", "d_t", "vocab_size", "profile", "latent"},
      "corpus");
  read_uint(s, "n_originals", g.n_originals);
  read_uint(s, "augments_per_original", g.augments_per_original);
  read_int(s, "d", g.d);
  read_int(s, "d_t", g.d_t);
  read_int(s, "vocab_size", g.vocab_size);
  if (const Json* p = section(s, "profile")) {
    json_io::reject_unknown_keys(*p,
                                 {"sigma_benign", "p_swap", "p_degrade", "degrade_mask_rate",
                                  "p_label_noise", "p_missing_audio"},
                                 "corpus.profile");
    read_double(*p, "sigma_benign", g.profile.sigma_benign);
    read_double(*p, "p_swap", g.profile.p_swap);
    read_double(*p, "p_degrade", g.profile.p_degrade);
    read_double(*p, "degrade_mask_rate", g.profile.degrade_mask_rate);
    read_double(*p, "p_label_noise", g.profile.p_label_noise);
    read_double(*p, "p_missing_audio", g.profile.p_missing_audio);
  }
  if (const Json* l = section(s, "latent")) {
    json_io::reject_unknown_keys(*l,
                                 {"base_scale", "signal", "cluster_offset", "noise",
                                  "nuisance_rank", "nuisance_scale"},
                                 "corpus.latent");
    read_double(*l, "base_scale", g.latent.base_scale);
    read_double(*l, "signal", g.latent.signal);
    read_double(*l, "cluster_offset", g.latent.cluster_offset);
    read_double(*l, "noise", g.latent.noise);
    read_uint(*l, "nuisance_rank", g.latent.nuisance_rank);
    read_double(*l, "nuisance_scale", g.latent.nuisance_scale);
  }
}

void parse_qa_section(const Json& s, QaConfig& q) {
  json_io::reject_unknown_keys(
      s, {"alpha", "rho", "batch_size", "steps", "lr", "hidden", "positives_include_augmented"},
      "qa");
  if (s.contains("alpha")) {
    const Json& a = s.at("alpha");
    if (!a.is_array() || a.size() != kFamilyCount) {
      throw ConfigError("qa.alpha must list four weights (pos, mix, mask, flip)");
    }
    for (std::size_t i = 0; i < kFamilyCount; ++i) q.alpha[i] = json_io::number(a[i], "qa.alpha");
  }
  read_double(s, "rho", q.rho);
  read_uint(s, "batch_size", q.batch_size);
  read_uint(s, "steps", q.steps);
  read_double(s, "lr", q.lr);
  read_uint(s, "hidden", q.hidden);
  read_bool(s, "positives_include_augmented", q.positives_include_augmented);
}

void parse_head_section(const Json& s, HeadConfig& h) {
  json_io::reject_unknown_keys(s, {"hidden", "steps", "batch_size", "lr"}, "head");
  read_uint(s, "hidden", h.hidden);
  read_uint(s, "steps", h.steps);
  read_uint(s, "batch_size", h.batch_size);
  read_double(s, "lr", h.lr);
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text) {
  Json root;
  try {
    root = json_io::parse(text, kWhat);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!root.is_object()) throw ConfigError("pipeline config must be a JSON object");
  PipelineConfig c;
  try {
    json_io::reject_unknown_keys(root,
                                 {"corpus", "test_fraction", "qa", "weights", "head", "arms",
                                  "seeds", "original_fraction", "threads", "report_dir"},
                                 kWhat);
    if (const Json* s = section(root, "corpus")) parse_corpus_section(*s, c.corpus);
    read_double(root, "test_fraction", c.test_fraction);
    if (const Json* s = section(root, "qa")) parse_qa_section(*s, c.qa);
    if (const Json* s = section(root, "weights")) {
      json_io::reject_unknown_keys(*s, {"w_min", "w_max", "gamma"}, "weights");
      read_double(*s, "w_min", c.weights.w_min);
      read_double(*s, "w_max", c.weights.w_max);
      read_double(*s, "gamma", c.weights.gamma);
    }
    if (const Json* s = section(root, "head")) parse_head_section(*s, c.head);
    if (root.contains("arms")) {
      const Json& a = root.at("arms");
      if (!a.is_array()) throw ConfigError("arms must be an array of names");
      c.arms.clear();
      for (const Json& name : a) {
        if (!name.is_string()) throw ConfigError("arms must be an array of names");
        c.arms.push_back(parse_arm(name.get<std::string>()));
      }
    }
    if (root.contains("seeds")) {
      const Json& a = root.at("seeds");
      if (!a.is_array()) throw ConfigError("seeds must be an array of integers");
      c.seeds.clear();
      for (const Json& v : a) {
        const auto s = json_io::integer(v, "seeds");
        if (s < 0) throw ConfigError("seeds must be non-negative");
        c.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    }
    read_double(root, "original_fraction", c.original_fraction);
    read_uint(root, "threads", c.threads);
    if (root.contains("report_dir")) {
      if (!root.at("report_dir").is_string()) throw ConfigError("report_dir must be a string");
      c.report_dir = root.at("report_dir").get<std::string>();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(kWhat) + ": " + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(json_io::read_file(path));
}

std::string serialize_pipeline_config(const PipelineConfig& c) {
  OJson j;
  const CorruptionProfile& p = c.corpus.profile;
  const LatentModelConfig& l = c.corpus.latent;
  j["corpus"] = {{"n_originals", c.corpus.n_originals},
                 {"augments_per_original", c.corpus.augments_per_original},
                 {"d", c.corpus.d},
                 {"d_t", c.corpus.d_t},
                 {"vocab_size", c.corpus.vocab_size},
                 {"profile",
                  {{"sigma_benign", p.sigma_benign},
                   {"p_swap", p.p_swap},
                   {"p_degrade", p.p_degrade},
                   {"degrade_mask_rate", p.degrade_mask_rate},
                   {"p_label_noise", p.p_label_noise},
                   {"p_missing_audio", p.p_missing_audio}}},
                 {"latent",
                  {{"base_scale", l.base_scale},
                   {"signal", l.signal},
                   {"cluster_offset", l.cluster_offset},
                   {"noise", l.noise},
                   {"nuisance_rank", l.nuisance_rank},
                   {"nuisance_scale", l.nuisance_scale}}}};
  j["test_fraction"] = c.test_fraction;
  j["qa"] = {{"alpha", c.qa.alpha},
             {"rho", c.qa.rho},
             {"batch_size", c.qa.batch_size},
             {"steps", c.qa.steps},
             {"lr", c.qa.lr},
             {"hidden", c.qa.hidden},
             {"positives_include_augmented", c.qa.positives_include_augmented}};
  j["weights"] = {{"w_min", c.weights.w_min}, {"w_max", c.weights.w_max}, {"gamma", c.weights.gamma}};
  j["head"] = {{"hidden", c.head.hidden},
               {"steps", c.head.steps},
               {"batch_size", c.head.batch_size},
               {"lr", c.head.lr}};
  j["arms"] = OJson::array();
  for (Arm a : c.arms) j["arms"].push_back(std::string(arm_name(a)));
  j["seeds"] = c.seeds;
  j["original_fraction"] = c.original_fraction;
  j["threads"] = c.threads;
  j["report_dir"] = c.report_dir.string();
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Evaluation

ArmMetrics evaluate_predictions(std::span<const double> pred, std::span<const double> gold) {
  ArmMetrics m;
  m.n = pred.size();
  m.acc2 = acc_k(pred, gold, 2);
  m.acc5 = acc_k(pred, gold, 5);
  m.acc7 = acc_k(pred, gold, 7);
  m.mae = mae(pred, gold);
  try {
    m.corr = pearson_corr(pred, gold);
  } catch (const Error&) {
    m.corr.reset();
  }
  std::vector<int> pc(pred.size()), gc(gold.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pc[i] = derive_polarity(pred[i]);
    gc[i] = derive_polarity(gold[i]);
  }
  const WeightedScores w = weighted_scores(pc, gc);
  m.f1 = w.f1;
  m.wacc = w.accuracy;
  m.wf1 = w.f1;
  m.wprec = w.precision;
  m.wrec = w.recall;
  return m;
}

QaEvaluation evaluate_scorer(const Corpus& corpus, const QaParams& params) {
  const std::vector<double> scores = score_corpus(corpus, params);
  std::vector<double> s;
  std::vector<int> labels;
  double sum_clean = 0.0, sum_corrupted = 0.0;
  QaEvaluation out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const FeatureSample& f = corpus[i];
    if (f.origin != Origin::kAugmented || !f.hidden_quality) continue;
    const bool clean = *f.hidden_quality == 1.0;
    s.push_back(scores[i]);
    labels.push_back(clean ? 1 : 0);
    (clean ? sum_clean : sum_corrupted) += scores[i];
    ++(clean ? out.n_clean : out.n_corrupted);
  }
  if (out.n_clean > 0) out.mean_clean = sum_clean / static_cast<double>(out.n_clean);
  if (out.n_corrupted > 0) out.mean_corrupted = sum_corrupted / static_cast<double>(out.n_corrupted);
  if (out.n_clean > 0 && out.n_corrupted > 0) out.auc = roc_auc(s, labels);
  return out;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

template <typename F>
auto stage(const char* name, std::uint64_t seed, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(std::string("stage ") + name + " failed (seed " + std::to_string(seed) +
                "): " + e.what());
  }
}

HeadConfig arm_head_config(const PipelineConfig& c, Arm arm, std::uint64_t seed) {
  HeadConfig h = c.head;
  h.seed = seed;
  h.original_fraction = c.original_fraction;
  h.use_originals = arm != Arm::kAugmented;
  h.use_augmented = arm != Arm::kOriginal;
  return h;
}

SeedResult run_seed(const PipelineConfig& c, std::uint64_t seed) {
  const std::filesystem::path dir =
      c.report_dir.empty() ? std::filesystem::path() : c.report_dir / ("seed-" + std::to_string(seed));
  if (!dir.empty()) std::filesystem::create_directories(dir);

  GeneratorConfig gen = c.corpus;
  gen.seed = seed;
  const Corpus full = stage("gen-corpus", seed, [&] { return generate_corpus(gen); });
  const auto [train, test] = stage("split", seed, [&] { return split_corpus(full, c.test_fraction); });
  if (!dir.empty()) {
    save_corpus(train, dir / "train.jsonl");
    save_corpus(test, dir / "test.jsonl");
  }

  SeedResult result;
  result.seed = seed;
  const bool need_weights = std::find(c.arms.begin(), c.arms.end(), Arm::kWeighted) != c.arms.end();
  WeightFile weights;
  if (need_weights) {
    QaConfig qa = c.qa;
    qa.seed = seed;
    qa.original_fraction = c.original_fraction;
    const Stage0Result s0 = stage("stage0", seed, [&] { return train_stage0(train, qa); });
    weights = stage("score", seed, [&] { return build_weight_file(train, s0.params, c.weights); });
    result.qa = stage("eval-qa", seed, [&] { return evaluate_scorer(test, s0.params); });
    if (!dir.empty()) {
      save_qa_snapshot({train.header(), s0.params}, dir / "qa.json");
      json_io::write_file(dir / "weights.json", serialize_weight_file(weights));
    }
  }

  std::vector<std::size_t> eval_idx;
  std::vector<double> gold;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].origin != Origin::kOriginal) continue;
    eval_idx.push_back(i);
    gold.push_back(test[i].sentiment);
  }

  std::vector<TrainRun> runs(c.arms.size());
  auto train_arm = [&](std::size_t k) {
    const Arm arm = c.arms[k];
    const WeightFile* w = arm == Arm::kWeighted ? &weights : nullptr;
    runs[k] = stage("stage1", seed, [&] { return train_stage1(train, w, arm_head_config(c, arm, seed)); });
  };
  if (c.threads > 1 && c.arms.size() > 1) {
    std::vector<std::jthread> workers;
    std::vector<std::exception_ptr> errors(c.arms.size());
    for (std::size_t k = 0; k < c.arms.size(); ++k) {
      workers.emplace_back([&, k] {
        try {
          train_arm(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
    workers.clear();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t k = 0; k < c.arms.size(); ++k) train_arm(k);
  }

  for (std::size_t k = 0; k < c.arms.size(); ++k) {
    const Arm arm = c.arms[k];
    std::vector<double> pred;
    pred.reserve(eval_idx.size());
    for (std::size_t i : eval_idx) pred.push_back(predict(runs[k].head, test[i], test.header()));
    result.arms[arm] = stage("eval", seed, [&] { return evaluate_predictions(pred, gold); });
    if (!dir.empty()) {
      const std::string name(arm_name(arm));
      save_head_snapshot({train.header(), runs[k].head}, dir / ("head-" + name + ".json"));
      json_io::write_file(dir / ("run-" + name + ".jsonl"), serialize_run_log(runs[k].loss_trace));
    }
  }
  log::info("seed " + std::to_string(seed) + " done");
  return result;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& xs) {
  if (xs.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& x : xs) {
    if (!x) return std::nullopt;
    sum += *x;
  }
  return sum / static_cast<double>(xs.size());
}

void compute_means(PipelineReport& report) {
  report.mean.clear();
  report.qa_mean.reset();
  if (report.seeds.empty()) return;
  const double n = static_cast<double>(report.seeds.size());
  for (const auto& [arm, first] : report.seeds.front().arms) {
    ArmMetrics m;
    std::vector<std::optional<double>> corr;
    for (const SeedResult& s : report.seeds) {
      const auto it = s.arms.find(arm);
      if (it == s.arms.end()) throw Error("report: arm missing from a seed");
      const ArmMetrics& a = it->second;
      m.acc2 += a.acc2;
      m.acc5 += a.acc5;
      m.acc7 += a.acc7;
      m.f1 += a.f1;
      m.mae += a.mae;
      m.wacc += a.wacc;
      m.wf1 += a.wf1;
      m.wprec += a.wprec;
      m.wrec += a.wrec;
      m.n += a.n;
      corr.push_back(a.corr);
    }
    for (double* v : {&m.acc2, &m.acc5, &m.acc7, &m.f1, &m.mae, &m.wacc, &m.wf1, &m.wprec, &m.wrec}) {
      *v /= n;
    }
    m.corr = mean_of(corr);
    report.mean[arm] = m;
  }
  if (report.seeds.front().qa) {
    std::vector<std::optional<double>> auc, clean, corrupted;
    QaEvaluation q;
    for (const SeedResult& s : report.seeds) {
      if (!s.qa) return;
      auc.push_back(s.qa->auc);
      clean.push_back(s.qa->mean_clean);
      corrupted.push_back(s.qa->mean_corrupted);
      q.n_clean += s.qa->n_clean;
      q.n_corrupted += s.qa->n_corrupted;
    }
    q.auc = mean_of(auc);
    q.mean_clean = mean_of(clean);
    q.mean_corrupted = mean_of(corrupted);
    report.qa_mean = q;
  }
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config) {
  config.validate();
  if (!config.report_dir.empty()) {
    std::filesystem::create_directories(config.report_dir);
    json_io::write_file(config.report_dir / "config.json", serialize_pipeline_config(config));
  }
  PipelineReport report;
  for (std::uint64_t seed : config.seeds) report.seeds.push_back(run_seed(config, seed));
  compute_means(report);
  if (!config.report_dir.empty()) {
    json_io::write_file(config.report_dir / "report.json", serialize_report(report));
    json_io::write_file(config.report_dir / "report.txt", render_report_table(report));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report formats

namespace {

OJson opt(const std::optional<double>& v) { return v ? OJson(*v) : OJson(nullptr); }

OJson arm_json(const ArmMetrics& m) {
  return OJson{{"acc2", m.acc2}, {"acc5", m.acc5},   {"acc7", m.acc7},   {"f1", m.f1},
               {"mae", m.mae},   {"corr", opt(m.corr)}, {"wacc", m.wacc}, {"wf1", m.wf1},
               {"wprec", m.wprec}, {"wrec", m.wrec}, {"n", m.n}};
}

OJson arms_json(const std::map<Arm, ArmMetrics>& arms) {
  OJson out = OJson::object();
  for (const auto& [arm, m] : arms) out[std::string(arm_name(arm))] = arm_json(m);
  return out;
}

OJson qa_json(const QaEvaluation& q) {
  return OJson{{"auc", opt(q.auc)},
               {"mean_clean", opt(q.mean_clean)},
               {"mean_corrupted", opt(q.mean_corrupted)},
               {"n_clean", q.n_clean},
               {"n_corrupted", q.n_corrupted}};
}

std::optional<double> read_opt(const Json& j, const char* key) {
  const Json& v = json_io::field(j, key, "report");
  if (v.is_null()) return std::nullopt;
  return json_io::number(v, key);
}

ArmMetrics read_arm(const Json& j) {
  ArmMetrics m;
  m.acc2 = json_io::number(json_io::field(j, "acc2", "report"), "acc2");
  m.acc5 = json_io::number(json_io::field(j, "acc5", "report"), "acc5");
  m.acc7 = json_io::number(json_io::field(j, "acc7", "report"), "acc7");
  m.f1 = json_io::number(json_io::field(j, "f1", "report"), "f1");
  m.mae = json_io::number(json_io::field(j, "mae", "report"), "mae");
  m.corr = read_opt(j, "corr");
  m.wacc = json_io::number(json_io::field(j, "wacc", "report"), "wacc");
  m.wf1 = json_io::number(json_io::field(j, "wf1", "report"), "wf1");
  m.wprec = json_io::number(json_io::field(j, "wprec", "report"), "wprec");
  m.wrec = json_io::number(json_io::field(j, "wrec", "report"), "wrec");
  m.n = static_cast<std::size_t>(json_io::integer(json_io::field(j, "n", "report"), "n"));
  return m;
}

std::map<Arm, ArmMetrics> read_arms(const Json& j) {
  std::map<Arm, ArmMetrics> out;
  for (const auto& [name, v] : j.items()) out[parse_arm(name)] = read_arm(v);
  return out;
}

QaEvaluation read_qa(const Json& j) {
  QaEvaluation q;
  q.auc = read_opt(j, "auc");
  q.mean_clean = read_opt(j, "mean_clean");
  q.mean_corrupted = read_opt(j, "mean_corrupted");
  q.n_clean = static_cast<std::size_t>(json_io::integer(json_io::field(j, "n_clean", "report"), "n_clean"));
  q.n_corrupted =
      static_cast<std::size_t>(json_io::integer(json_io::field(j, "n_corrupted", "report"), "n_corrupted"));
  return q;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

}  // namespace

std::string serialize_report(const PipelineReport& report) {
  OJson j;
  j["versions"] = {{"report", kReportVersion},
                   {"generator", std::string(kGeneratorVersion)},
                   {"scorer", "qualmix-qa/1"},
                   {"head", "qualmix-head/1"}};
  j["binning"] = std::string(kBinningNote);
  j["seeds"] = OJson::array();
  for (const SeedResult& s : report.seeds) {
    OJson row{{"seed", s.seed}, {"qa", s.qa ? qa_json(*s.qa) : OJson(nullptr)}, {"arms", arms_json(s.arms)}};
    j["seeds"].push_back(row);
  }
  j["mean"] = {{"qa", report.qa_mean ? qa_json(*report.qa_mean) : OJson(nullptr)},
               {"arms", arms_json(report.mean)}};
  return j.dump(2) + "\n";
}

PipelineReport parse_report(std::string_view text) {
  const Json j = json_io::parse(text, "report");
  try {
    const Json& versions = json_io::field(j, "versions", "report");
    if (json_io::integer(json_io::field(versions, "report", "report versions"), "report") != kReportVersion) {
      throw Error("report: unsupported version");
    }
    PipelineReport r;
    for (const Json& s : json_io::field(j, "seeds", "report")) {
      SeedResult row;
      row.seed = static_cast<std::uint64_t>(json_io::integer(json_io::field(s, "seed", "report"), "seed"));
      if (const Json& q = json_io::field(s, "qa", "report"); !q.is_null()) row.qa = read_qa(q);
      row.arms = read_arms(json_io::field(s, "arms", "report"));
      r.seeds.push_back(std::move(row));
    }
    const Json& mean = json_io::field(j, "mean", "report");
    if (const Json& q = json_io::field(mean, "qa", "report"); !q.is_null()) r.qa_mean = read_qa(q);
    r.mean = read_arms(json_io::field(mean, "arms", "report"));
    return r;
  } catch (const Json::exception& e) {
    throw Error(std::string("report: ") + e.what());
  }
}

std::string render_report_table(const PipelineReport& report) {
  std::string out;
  char line[256];
  auto header = [&] {
    std::snprintf(line, sizeof(line), "  %-10s %8s %8s %8s %8s %8s %8s %8s %8s %8s\n", "arm", "acc2",
                  "acc5", "acc7", "f1", "mae", "corr", "wprec", "wrec", "n");
    out += line;
  };
  auto rows = [&](const std::map<Arm, ArmMetrics>& arms) {
    for (const auto& [arm, m] : arms) {
      std::snprintf(line, sizeof(line), "  %-10s %8s %8s %8s %8s %8s %8s %8s %8s %8zu\n",
                    std::string(arm_name(arm)).c_str(), fmt(m.acc2).c_str(), fmt(m.acc5).c_str(),
                    fmt(m.acc7).c_str(), fmt(m.f1).c_str(), fmt(m.mae).c_str(), fmt(m.corr).c_str(),
                    fmt(m.wprec).c_str(), fmt(m.wrec).c_str(), m.n);
      out += line;
    }
  };
  auto qa_line = [&](const QaEvaluation& q) {
    out += "  scorer: auc " + fmt(q.auc) + ", mean score clean " + fmt(q.mean_clean) +
           ", corrupted " + fmt(q.mean_corrupted) + "\n";
  };
  out += std::string(kBinningNote) + "\n\n";
  for (const SeedResult& s : report.seeds) {
    out += "seed " + std::to_string(s.seed) + "\n";
    if (s.qa) qa_line(*s.qa);
    header();
    rows(s.arms);
    out += "\n";
  }
  out += "mean over " + std::to_string(report.seeds.size()) + " seed(s)\n";
  if (report.qa_mean) qa_line(*report.qa_mean);
  header();
  rows(report.mean);
  return out;
}

std::string render_report_csv(const PipelineReport& report) {
  std::string out = "seed,arm,acc2,acc5,acc7,f1,mae,corr,wacc,wf1,wprec,wrec,n\n";
  auto rows = [&](const std::string& seed, const std::map<Arm, ArmMetrics>& arms) {
    for (const auto& [arm, m] : arms) {
      out += seed + "," + std::string(arm_name(arm));
      for (double v : {m.acc2, m.acc5, m.acc7, m.f1, m.mae}) {
        out += ",";
        json_io::append_shortest(out, v);
      }
      out += ",";
      if (m.corr) json_io::append_shortest(out, *m.corr);
      for (double v : {m.wacc, m.wf1, m.wprec, m.wrec}) {
        out += ",";
        json_io::append_shortest(out, v);
      }
      out += "," + std::to_string(m.n) + "\n";
    }
  };
  for (const SeedResult& s : report.seeds) rows(std::to_string(s.seed), s.arms);
  rows("mean", report.mean);
  return out;
}

}  // namespace qualmix
