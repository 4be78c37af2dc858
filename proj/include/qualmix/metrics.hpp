// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Evaluation metrics for continuous sentiment predictions and class labels.

#pragma once

#include <span>

namespace qualmix {

// Fraction of pairs whose equal-width bins of [-1, 1] agree. k == 2 uses the
// polarity convention (y >= 0 is positive). Throws Error on a length
// mismatch, empty input, k < 2, or a value outside [-1, 1].
double acc_k(std::span<const double> pred, std::span<const double> gold, int k);

struct WeightedScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Per-class precision, recall and F1 averaged with gold-support weights.
// Classes that never occur in gold are excluded; a class that is never
// predicted has precision 0. Throws Error on empty or mismatched input.
WeightedScores weighted_scores(std::span<const int> pred, std::span<const int> gold);
double weighted_f1(std::span<const int> pred, std::span<const int> gold);
double weighted_precision(std::span<const int> pred, std::span<const int> gold);
double weighted_recall(std::span<const int> pred, std::span<const int> gold);

double mae(std::span<const double> pred, std::span<const double> gold);
// Throws Error "correlation undefined" when either side has zero variance.
double pearson_corr(std::span<const double> pred, std::span<const double> gold);

// Probability that a random positive outranks a random negative, ties
// counting one half. Throws Error unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace qualmix
