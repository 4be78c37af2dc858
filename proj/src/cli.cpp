// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/cli.hpp"

#include <algorithm>
#include <optional>

#include "CLI11.hpp"
#include "qualmix/corpus.hpp"
#include "qualmix/error.hpp"
#include "qualmix/json_io.hpp"
#include "qualmix/kernels.hpp"
#include "qualmix/log.hpp"
#include "qualmix/metrics.hpp"
#include "qualmix/pipeline.hpp"
#include "qualmix/qa_module.hpp"
#include "qualmix/weighted_finetune.hpp"

namespace qualmix {

namespace {

using OJson = nlohmann::ordered_json;

struct GlobalOptions {
  bool json = false;
  bool verbose = false;
  std::string kernels;
};

struct GenOptions {
  std::uint64_t seed = 0;
  std::string out, test_out, config;
  double test_fraction = 0.25;
  std::optional<std::size_t> n_originals, augments;
  bool clean = false;
};

struct Stage0Options {
  std::uint64_t seed = 0;
  std::string corpus, out, config, log_path;
  std::optional<std::size_t> steps, batch_size, hidden;
  std::optional<double> lr, rho, original_fraction;
};

struct ScoreOptions {
  std::string corpus, qa, out, config;
  std::optional<double> w_min, w_max, gamma;
};

struct Stage1Options {
  std::uint64_t seed = 0;
  std::string corpus, weights, out, config, log_path;
  bool uniform = false;
  std::string pool = "all";
  std::optional<std::size_t> steps, batch_size, hidden;
  std::optional<double> lr, original_fraction;
};

struct EvalOptions {
  std::string head, corpus, qa;
};

struct ReportOptions {
  std::string report, csv;
};

struct PipelineOptions {
  std::string config, report_dir, csv;
  std::optional<std::size_t> threads;
};

template <typename T>
void apply(const std::optional<T>& v, T& target) {
  if (v) target = *v;
}

void emit(std::ostream& out, const GlobalOptions& g, const OJson& j, const std::string& text) {
  if (g.json) {
    out << j.dump() << "\n";
  } else {
    out << text;
  }
}

void cmd_gen(const GenOptions& o, const GlobalOptions& g, std::ostream& out) {
  GeneratorConfig gen;
  if (!o.config.empty()) gen = load_pipeline_config(o.config).corpus;
  if (o.clean) gen.profile = CorruptionProfile::clean();
  apply(o.n_originals, gen.n_originals);
  apply(o.augments, gen.augments_per_original);
  gen.seed = o.seed;
  const Corpus corpus = generate_corpus(gen);
  OJson j{{"seed", o.seed}};
  std::string text;
  if (o.test_out.empty()) {
    save_corpus(corpus, o.out);
    j["out"] = {{"path", o.out}, {"records", corpus.size()}, {"checksum", corpus_checksum(corpus)}};
    text = "wrote " + std::to_string(corpus.size()) + " records to " + o.out + "\n";
  } else {
    if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0)) {
      throw ConfigError("--test-fraction must be in (0, 1)");
    }
    const auto [train, test] = split_corpus(corpus, o.test_fraction);
    save_corpus(train, o.out);
    save_corpus(test, o.test_out);
    j["out"] = {{"path", o.out}, {"records", train.size()}, {"checksum", corpus_checksum(train)}};
    j["test_out"] = {{"path", o.test_out}, {"records", test.size()}, {"checksum", corpus_checksum(test)}};
    text = "wrote " + std::to_string(train.size()) + " records to " + o.out + " and " +
           std::to_string(test.size()) + " to " + o.test_out + "\n";
  }
  emit(out, g, j, text);
}

void cmd_stage0(const Stage0Options& o, const GlobalOptions& g, std::ostream& out) {
  QaConfig qa;
  if (!o.config.empty()) {
    const PipelineConfig pc = load_pipeline_config(o.config);
    qa = pc.qa;
    qa.original_fraction = pc.original_fraction;
  }
  apply(o.steps, qa.steps);
  apply(o.batch_size, qa.batch_size);
  apply(o.hidden, qa.hidden);
  apply(o.lr, qa.lr);
  apply(o.rho, qa.rho);
  apply(o.original_fraction, qa.original_fraction);
  qa.seed = o.seed;
  qa.validate();
  const Corpus corpus = load_corpus(o.corpus);
  const Stage0Result r = train_stage0(corpus, qa);
  save_qa_snapshot({corpus.header(), r.params}, o.out);
  if (!o.log_path.empty()) json_io::write_file(o.log_path, serialize_run_log(r.loss_trace));
  const double final_loss = r.loss_trace.empty() ? 0.0 : r.loss_trace.back();
  emit(out, g,
       OJson{{"out", o.out}, {"qa_checksum", qa_checksum(r.params)}, {"steps", r.loss_trace.size()},
             {"final_loss", final_loss}},
       "trained scorer for " + std::to_string(r.loss_trace.size()) + " steps, final loss " +
           std::to_string(final_loss) + ", wrote " + o.out + "\n");
}

void check_dims(const CorpusHeader& a, const CorpusHeader& b, const char* what) {
  if (a.d != b.d || a.d_t != b.d_t || a.vocab_size != b.vocab_size || !(a.verbalizer == b.verbalizer)) {
    throw Error(std::string(what) + " does not match the corpus (dim mismatch)");
  }
}

void cmd_score(const ScoreOptions& o, const GlobalOptions& g, std::ostream& out) {
  WeightMapConfig map;
  if (!o.config.empty()) map = load_pipeline_config(o.config).weights;
  apply(o.w_min, map.w_min);
  apply(o.w_max, map.w_max);
  apply(o.gamma, map.gamma);
  map.validate();
  const Corpus corpus = load_corpus(o.corpus);
  const QaSnapshot snap = load_qa_snapshot(o.qa);
  check_dims(snap.header, corpus.header(), "scorer snapshot");
  const WeightFile file = export_weights(corpus, snap.params, map, o.out);
  emit(out, g,
       OJson{{"out", o.out}, {"entries", file.entries.size()}, {"qa_checksum", file.qa_checksum},
             {"corpus_checksum", file.corpus_checksum}},
       "wrote " + std::to_string(file.entries.size()) + " weights to " + o.out + "\n");
}

void cmd_stage1(const Stage1Options& o, const GlobalOptions& g, std::ostream& out) {
  HeadConfig head;
  if (!o.config.empty()) {
    const PipelineConfig pc = load_pipeline_config(o.config);
    head = pc.head;
    head.original_fraction = pc.original_fraction;
  }
  apply(o.steps, head.steps);
  apply(o.batch_size, head.batch_size);
  apply(o.hidden, head.hidden);
  apply(o.lr, head.lr);
  apply(o.original_fraction, head.original_fraction);
  head.seed = o.seed;
  if (o.pool == "original") {
    head.use_augmented = false;
  } else if (o.pool == "augmented") {
    head.use_originals = false;
  }
  head.validate();
  const Corpus corpus = load_corpus(o.corpus);
  std::optional<WeightFile> weights;
  if (!o.uniform) weights = load_weight_file(o.weights);
  const TrainRun run = train_stage1(corpus, weights ? &*weights : nullptr, head);
  save_head_snapshot({corpus.header(), run.head}, o.out);
  if (!o.log_path.empty()) json_io::write_file(o.log_path, serialize_run_log(run.loss_trace));
  const double final_loss = run.loss_trace.back();
  emit(out, g,
       OJson{{"out", o.out}, {"weights", run.weight_source}, {"steps", run.loss_trace.size()},
             {"final_loss", final_loss}, {"head_checksum", head_checksum(run.head)}},
       "trained head (" + run.weight_source + ") for " + std::to_string(run.loss_trace.size()) +
           " steps, final loss " + std::to_string(final_loss) + ", wrote " + o.out + "\n");
}

std::string opt_text(const std::optional<double>& v) { return v ? std::to_string(*v) : "n/a"; }

OJson opt_json(const std::optional<double>& v) { return v ? OJson(*v) : OJson(nullptr); }

void cmd_eval(const EvalOptions& o, const GlobalOptions& g, std::ostream& out) {
  const Corpus corpus = load_corpus(o.corpus);
  const HeadSnapshot snap = load_head_snapshot(o.head);
  check_dims(snap.header, corpus.header(), "head snapshot");
  std::vector<double> pred, gold;
  for (const FeatureSample& s : corpus.samples()) {
    if (s.origin != Origin::kOriginal) continue;
    pred.push_back(predict(snap.head, s, corpus.header()));
    gold.push_back(s.sentiment);
  }
  if (pred.empty()) throw Error("eval: corpus has no original samples");
  const ArmMetrics m = evaluate_predictions(pred, gold);
  OJson j{{"n", m.n},       {"acc2", m.acc2},   {"acc5", m.acc5},   {"acc7", m.acc7},
          {"f1", m.f1},     {"mae", m.mae},     {"corr", opt_json(m.corr)},
          {"wacc", m.wacc}, {"wf1", m.wf1},     {"wprec", m.wprec}, {"wrec", m.wrec}};
  std::string text = "n " + std::to_string(m.n) + "\nacc2 " + std::to_string(m.acc2) + "\nacc5 " +
                     std::to_string(m.acc5) + "\nacc7 " + std::to_string(m.acc7) + "\nf1 " +
                     std::to_string(m.f1) + "\nmae " + std::to_string(m.mae) + "\ncorr " +
                     opt_text(m.corr) + "\n";
  if (!o.qa.empty()) {
    const QaSnapshot qa = load_qa_snapshot(o.qa);
    check_dims(qa.header, corpus.header(), "scorer snapshot");
    const QaEvaluation q = evaluate_scorer(corpus, qa.params);
    j["qa"] = {{"auc", opt_json(q.auc)},
               {"mean_clean", opt_json(q.mean_clean)},
               {"mean_corrupted", opt_json(q.mean_corrupted)}};
    text += "qa_auc " + opt_text(q.auc) + "\n";
  }
  emit(out, g, j, text);
}

void cmd_report(const ReportOptions& o, const GlobalOptions& g, std::ostream& out) {
  const PipelineReport r = parse_report(json_io::read_file(o.report));
  if (!o.csv.empty()) json_io::write_file(o.csv, render_report_csv(r));
  if (g.json) {
    out << serialize_report(r);
  } else {
    out << render_report_table(r);
  }
}

void cmd_pipeline(const PipelineOptions& o, const GlobalOptions& g, std::ostream& out) {
  PipelineConfig c = load_pipeline_config(o.config);
  if (!o.report_dir.empty()) c.report_dir = o.report_dir;
  apply(o.threads, c.threads);
  const PipelineReport r = run_pipeline(c);
  if (!o.csv.empty()) json_io::write_file(o.csv, render_report_csv(r));
  if (g.json) {
    out << serialize_report(r);
  } else {
    out << render_report_table(r);
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quality-weighted training pipeline for augmented multimodal features", "qualmix"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");
  app.add_option("--kernels", g.kernels, "Kernel backend: auto, scalar, avx2, neon");

  GenOptions gen;
  auto* sc_gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus");
  sc_gen->add_option("--seed", gen.seed, "Generator seed")->required();
  sc_gen->add_option("--out", gen.out, "Corpus (or training split) path")->required();
  sc_gen->add_option("--test-out", gen.test_out, "Also split off a held-out corpus to this path");
  sc_gen->add_option("--test-fraction", gen.test_fraction, "Held-out fraction of originals");
  sc_gen->add_option("--config", gen.config, "Pipeline config; its corpus section is used");
  sc_gen->add_option("--n-originals", gen.n_originals, "Number of original samples");
  sc_gen->add_option("--augments", gen.augments, "Augmentations per original");
  sc_gen->add_flag("--clean", gen.clean, "Zero-corruption profile");

  Stage0Options s0;
  auto* sc_s0 = app.add_subcommand("stage0", "Train the quality scorer");
  sc_s0->add_option("--corpus", s0.corpus, "Training corpus")->required();
  sc_s0->add_option("--seed", s0.seed, "Training seed")->required();
  sc_s0->add_option("--out", s0.out, "Scorer snapshot path")->required();
  sc_s0->add_option("--config", s0.config, "Pipeline config; its qa section is used");
  sc_s0->add_option("--log", s0.log_path, "Loss trace (JSONL)");
  sc_s0->add_option("--steps", s0.steps);
  sc_s0->add_option("--batch-size", s0.batch_size);
  sc_s0->add_option("--hidden", s0.hidden);
  sc_s0->add_option("--lr", s0.lr);
  sc_s0->add_option("--rho", s0.rho, "Mask rate for masked negatives");
  sc_s0->add_option("--original-fraction", s0.original_fraction);

  ScoreOptions sc;
  auto* sc_score = app.add_subcommand("score", "Score a corpus and export the weight file");
  sc_score->add_option("--corpus", sc.corpus, "Corpus to score")->required();
  sc_score->add_option("--qa", sc.qa, "Scorer snapshot")->required();
  sc_score->add_option("--out", sc.out, "Weight file path")->required();
  sc_score->add_option("--config", sc.config, "Pipeline config; its weights section is used");
  sc_score->add_option("--w-min", sc.w_min);
  sc_score->add_option("--w-max", sc.w_max);
  sc_score->add_option("--gamma", sc.gamma);

  Stage1Options s1;
  auto* sc_s1 = app.add_subcommand("stage1", "Weighted fine-tuning of the surrogate head");
  sc_s1->add_option("--corpus", s1.corpus, "Training corpus")->required();
  auto* w_opt = sc_s1->add_option("--weights", s1.weights, "Weight file from `score`");
  auto* u_opt = sc_s1->add_flag("--uniform", s1.uniform, "Every weight 1");
  w_opt->excludes(u_opt);
  sc_s1->add_option("--seed", s1.seed, "Training seed")->required();
  sc_s1->add_option("--out", s1.out, "Head snapshot path")->required();
  sc_s1->add_option("--config", s1.config, "Pipeline config; its head section is used");
  sc_s1->add_option("--log", s1.log_path, "Loss trace (JSONL)");
  sc_s1->add_option("--pool", s1.pool, "Training samples")
      ->check(CLI::IsMember({"all", "original", "augmented"}));
  sc_s1->add_option("--steps", s1.steps);
  sc_s1->add_option("--batch-size", s1.batch_size);
  sc_s1->add_option("--hidden", s1.hidden);
  sc_s1->add_option("--lr", s1.lr);
  sc_s1->add_option("--original-fraction", s1.original_fraction);

  EvalOptions ev;
  auto* sc_eval = app.add_subcommand("eval", "Evaluate a head on the originals of a corpus");
  sc_eval->add_option("--head", ev.head, "Head snapshot")->required();
  sc_eval->add_option("--corpus", ev.corpus, "Held-out corpus")->required();
  sc_eval->add_option("--qa", ev.qa, "Also report scorer AUC on the augmentations");

  ReportOptions rp;
  auto* sc_report = app.add_subcommand("report", "Render a pipeline report");
  sc_report->add_option("--report", rp.report, "report.json")->required();
  sc_report->add_option("--dump-csv", rp.csv, "Write per-seed rows as CSV");

  PipelineOptions pl;
  auto* sc_pipe = app.add_subcommand("pipeline", "Run the full experiment");
  sc_pipe->add_option("--config", pl.config, "Pipeline config (JSON)")->required();
  sc_pipe->add_option("--report-dir", pl.report_dir, "Override report_dir");
  sc_pipe->add_option("--threads", pl.threads, "Arms trained concurrently");
  sc_pipe->add_option("--dump-csv", pl.csv, "Write per-seed rows as CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (sc_s1->parsed() && !s1.uniform && s1.weights.empty()) {
      throw CLI::ValidationError("stage1", "one of --weights or --uniform is required");
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    log::set_level(g.verbose ? log::Level::kInfo : log::Level::kWarning);
    if (!g.kernels.empty() && g.kernels != "auto") {
      kernels::select(kernels::parse_backend(g.kernels));
    }
    if (sc_gen->parsed()) cmd_gen(gen, g, out);
    if (sc_s0->parsed()) cmd_stage0(s0, g, out);
    if (sc_score->parsed()) cmd_score(sc, g, out);
    if (sc_s1->parsed()) cmd_stage1(s1, g, out);
    if (sc_eval->parsed()) cmd_eval(ev, g, out);
    if (sc_report->parsed()) cmd_report(rp, g, out);
    if (sc_pipe->parsed()) cmd_pipeline(pl, g, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace qualmix
