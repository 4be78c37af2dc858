// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "qualmix/corpus.hpp"
#include "qualmix/error.hpp"

namespace qualmix {

namespace {

template <typename A, typename B>
void check_pair(std::span<A> a, std::span<B> b, const char* what) {
  if (a.size() != b.size()) throw Error(std::string(what) + ": length mismatch");
  if (a.empty()) throw Error(std::string(what) + ": empty input");
}

}  // namespace

double acc_k(std::span<const double> pred, std::span<const double> gold, int k) {
  check_pair(pred, gold, "acc_k");
  if (k < 2) throw Error("acc_k: k must be at least 2");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!(std::abs(pred[i]) <= 1.0) || !(std::abs(gold[i]) <= 1.0)) {
      throw Error("acc_k: values must lie in [-1, 1]");
    }
    hits += sentiment_bin(pred[i], k) == sentiment_bin(gold[i], k) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

WeightedScores weighted_scores(std::span<const int> pred, std::span<const int> gold) {
  check_pair(pred, gold, "weighted_scores");
  struct Counts {
    std::size_t tp = 0, predicted = 0, support = 0;
  };
  std::map<int, Counts> classes;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++classes[gold[i]].support;
    ++classes[pred[i]].predicted;
    if (pred[i] == gold[i]) {
      ++classes[gold[i]].tp;
      ++correct;
    }
  }
  const auto n = static_cast<double>(pred.size());
  WeightedScores out;
  out.accuracy = static_cast<double>(correct) / n;
  for (const auto& [label, c] : classes) {
    if (c.support == 0) continue;
    const double weight = static_cast<double>(c.support) / n;
    const double precision =
        c.predicted == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.predicted);
    const double recall = static_cast<double>(c.tp) / static_cast<double>(c.support);
    const double f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    out.precision += weight * precision;
    out.recall += weight * recall;
    out.f1 += weight * f1;
  }
  return out;
}

double weighted_f1(std::span<const int> pred, std::span<const int> gold) {
  return weighted_scores(pred, gold).f1;
}

double weighted_precision(std::span<const int> pred, std::span<const int> gold) {
  return weighted_scores(pred, gold).precision;
}

double weighted_recall(std::span<const int> pred, std::span<const int> gold) {
  return weighted_scores(pred, gold).recall;
}

double mae(std::span<const double> pred, std::span<const double> gold) {
  check_pair(pred, gold, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - gold[i]);
  return sum / static_cast<double>(pred.size());
}

double pearson_corr(std::span<const double> pred, std::span<const double> gold) {
  check_pair(pred, gold, "pearson_corr");
  // The rounded mean of a constant sequence can differ from its elements, so
  // constancy is tested directly rather than through the variance.
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(pred) || constant(gold)) throw Error("correlation undefined");
  const auto n = static_cast<double>(pred.size());
  const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  const double mg = std::accumulate(gold.begin(), gold.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double a = pred[i] - mp;
    const double b = gold[i] - mg;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error("correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_pair(scores, labels, "roc_auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U from average ranks.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      } else if (labels[order[k]] != 0) {
        throw Error("roc_auc: labels must be 0 or 1");
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("roc_auc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

}  // namespace qualmix
