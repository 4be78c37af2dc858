// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end experiment driver: generate, split, train the scorer, export
// weights, train the surrogate head under each requested arm, evaluate.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qualmix/corpus.hpp"
#include "qualmix/qa_module.hpp"
#include "qualmix/weighted_finetune.hpp"

namespace qualmix {

// weighted: originals + augmentations under the exported weights.
// uniform: the same pool with every weight 1.
// original / augmented: one origin only, weight 1.
enum class Arm { kWeighted, kUniform, kOriginal, kAugmented };

std::string_view arm_name(Arm arm);
Arm parse_arm(std::string_view name);  // throws ConfigError

struct PipelineConfig {
  GeneratorConfig corpus;  // seed is overwritten per run
  double test_fraction = 0.25;
  QaConfig qa;
  WeightMapConfig weights;
  HeadConfig head;
  std::vector<Arm> arms{Arm::kWeighted, Arm::kUniform, Arm::kOriginal, Arm::kAugmented};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  // Applied to the training split of every arm and to the scorer's pool.
  double original_fraction = 1.0;
  // Arms run concurrently when > 1; results do not depend on it.
  std::size_t threads = 1;
  // Empty disables artifact output.
  std::filesystem::path report_dir;

  void validate() const;  // throws ConfigError
};

// JSON document; every section and key is optional, unknown keys are
// rejected with ConfigError.
PipelineConfig parse_pipeline_config(std::string_view text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string serialize_pipeline_config(const PipelineConfig& config);

struct ArmMetrics {
  double acc2 = 0.0;
  double acc5 = 0.0;
  double acc7 = 0.0;
  double f1 = 0.0;  // weighted over polarity classes
  double mae = 0.0;
  std::optional<double> corr;  // absent when a side has zero variance
  double wacc = 0.0;
  double wf1 = 0.0;
  double wprec = 0.0;
  double wrec = 0.0;
  std::size_t n = 0;

  friend bool operator==(const ArmMetrics&, const ArmMetrics&) = default;
};

// Scores held-out predictions against gold sentiment.
ArmMetrics evaluate_predictions(std::span<const double> pred, std::span<const double> gold);

struct QaEvaluation {
  std::optional<double> auc;  // clean (q* = 1) vs corrupted augmentations
  std::optional<double> mean_clean;
  std::optional<double> mean_corrupted;
  std::size_t n_clean = 0;
  std::size_t n_corrupted = 0;

  friend bool operator==(const QaEvaluation&, const QaEvaluation&) = default;
};

// Uses hidden_quality of the augmentations in `corpus`; evaluation only.
QaEvaluation evaluate_scorer(const Corpus& corpus, const QaParams& params);

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<QaEvaluation> qa;  // present when the weighted arm ran
  std::map<Arm, ArmMetrics> arms;

  friend bool operator==(const SeedResult&, const SeedResult&) = default;
};

struct PipelineReport {
  std::vector<SeedResult> seeds;
  std::map<Arm, ArmMetrics> mean;  // arithmetic mean of the per-seed rows
  std::optional<QaEvaluation> qa_mean;

  friend bool operator==(const PipelineReport&, const PipelineReport&) = default;
};

// Runs every seed. Errors are rethrown as Error naming the stage and seed.
// With a report_dir, writes config.json, report.json, report.txt and the
// per-seed artifacts under seed-<s>/.
PipelineReport run_pipeline(const PipelineConfig& config);

inline constexpr int kReportVersion = 1;

std::string serialize_report(const PipelineReport& report);
PipelineReport parse_report(std::string_view text);
std::string render_report_table(const PipelineReport& report);
std::string render_report_csv(const PipelineReport& report);

}  // namespace qualmix
