// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "qualmix/error.hpp"
#include "qualmix/weighted_finetune.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace qualmix;

namespace {

SurrogateHead random_head(HeadShape shape, Rng& rng, double scale = 0.5) {
  SurrogateHead h(shape);
  oracle::randomize(h.values(), rng, scale);
  return h;
}

HeadExample random_example(Rng& rng, const HeadShape& s) {
  HeadExample ex;
  for (std::size_t i = 0; i < s.input; ++i) ex.input.push_back(rng.normal());
  for (std::size_t t = 0; t < s.positions; ++t) {
    ex.targets.push_back(rng.bernoulli(0.3) ? kIgnoreIndex
                                            : static_cast<int>(rng.below(s.vocab)));
  }
  ex.targets[0] = static_cast<int>(rng.below(s.vocab));
  return ex;
}

std::vector<double> numeric_grad(SurrogateHead head, const std::vector<HeadExample>& batch,
                                 const std::vector<double>& w, double h = 1e-5) {
  std::vector<double> g(head.values().size());
  SurrogateHead scratch(head.shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double keep = head.values()[i];
    head.values()[i] = keep + h;
    const double up = weighted_batch_loss_grad(head, batch, w, scratch);
    head.values()[i] = keep - h;
    const double down = weighted_batch_loss_grad(head, batch, w, scratch);
    head.values()[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

HeadConfig quick_head(std::uint64_t seed) {
  HeadConfig c;
  c.steps = 30;
  c.batch_size = 8;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("weighted_finetune") {
  TEST_CASE("per-sample loss") {
    const std::vector<double> one{0.2, -1.0, 0.7};
    const std::vector<int> t1{2};
    CHECK(per_sample_loss({one.data(), 1, 3}, t1) ==
          doctest::Approx(oracle::log_sum_exp(one) - 0.7).epsilon(1e-15));

    // T = 3 with the middle position ignored.
    const std::vector<double> three{0.1, 0.5, -0.3, 9.0, -9.0, 4.0, 1.5, 0.0, -2.0};
    const std::vector<int> t3{1, kIgnoreIndex, 0};
    const double ce0 = oracle::log_sum_exp(std::span(three).subspan(0, 3)) - 0.5;
    const double ce2 = oracle::log_sum_exp(std::span(three).subspan(6, 3)) - 1.5;
    CHECK(per_sample_loss({three.data(), 3, 3}, t3) == doctest::Approx((ce0 + ce2) / 2).epsilon(1e-15));

    SUBCASE("extending the ignore tail changes nothing") {
      std::vector<double> longer = three;
      longer.insert(longer.end(), {5.0, -5.0, 2.0});
      const std::vector<int> t4{1, kIgnoreIndex, 0, kIgnoreIndex};
      CHECK(per_sample_loss({longer.data(), 4, 3}, t4) == per_sample_loss({three.data(), 3, 3}, t3));
    }
    SUBCASE("ignored logits are opaque") {
      std::vector<double> mutated = three;
      mutated[3] = -40.0;
      mutated[5] = 123.0;
      CHECK(per_sample_loss({mutated.data(), 3, 3}, t3) == per_sample_loss({three.data(), 3, 3}, t3));
    }
    SUBCASE("errors") {
      const std::vector<int> none{kIgnoreIndex, kIgnoreIndex, kIgnoreIndex};
      CHECK_THROWS_WITH_AS(per_sample_loss({three.data(), 3, 3}, none), "sample has no supervised tokens",
                           Error);
      const std::vector<int> bad{3, 0, 0};
      CHECK_THROWS_AS(per_sample_loss({three.data(), 3, 3}, bad), Error);
      CHECK_THROWS_AS(per_sample_loss({three.data(), 3, 3}, t1), Error);
    }
  }

  TEST_CASE("weighted batch loss") {
    const std::vector<double> l{0.5, 1.0};
    CHECK(weighted_batch_loss(l, std::vector<double>{1.5, 0.1}) == doctest::Approx(0.425).epsilon(1e-15));
    CHECK(weighted_batch_loss(l, std::vector<double>{1.0, 1.0}) == 0.75);
    CHECK(weighted_batch_loss(l, std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(weighted_batch_loss(l, std::vector<double>{1.0}), Error);
    CHECK_THROWS_AS(weighted_batch_loss(l, std::vector<double>{1.0, -0.5}), Error);
    CHECK_THROWS_AS(weighted_batch_loss(l, std::vector<double>{1.0, NAN}), Error);
  }

  TEST_CASE("batch loss matches the plain-loop reference") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
      const HeadShape s{5, 3, 3, 4};
      const SurrogateHead head = random_head(s, rng);
      std::vector<HeadExample> batch;
      std::vector<double> w;
      for (int i = 0; i < 3; ++i) {
        batch.push_back(random_example(rng, s));
        w.push_back(rng.uniform(0.0, 2.0));
      }
      SurrogateHead grad(s);
      const double got = weighted_batch_loss_grad(head, batch, w, grad);
      const double want = oracle::head_batch_loss(head, batch, w);
      CHECK(std::fabs(got - want) <= 1e-12 * std::max(1.0, want));
    }
  }

  TEST_CASE("analytic gradient matches central differences") {
    Rng rng(22);
    for (int trial = 0; trial < 20; ++trial) {
      const HeadShape s{5, 3, 3, 4};
      const SurrogateHead head = random_head(s, rng);
      std::vector<HeadExample> batch;
      std::vector<double> w;
      for (int i = 0; i < 3; ++i) {
        batch.push_back(random_example(rng, s));
        w.push_back(rng.uniform(0.1, 2.0));
      }
      SurrogateHead grad(s);
      weighted_batch_loss_grad(head, batch, w, grad);
      CHECK(oracle::max_relative_error(grad.values(), numeric_grad(head, batch, w)) < 1e-4);
    }
  }

  TEST_CASE("weights act linearly on the gradient") {
    Rng rng(23);
    const HeadShape s{5, 3, 3, 4};
    const SurrogateHead head = random_head(s, rng);
    std::vector<HeadExample> batch{random_example(rng, s), random_example(rng, s), random_example(rng, s)};
    const std::vector<double> w{0.7, 0.0, 1.3};

    SUBCASE("a zero-weight sample contributes nothing") {
      SurrogateHead base(s), perturbed(s);
      weighted_batch_loss_grad(head, batch, w, base);
      for (int& t : batch[1].targets) {
        if (t != kIgnoreIndex) t = (t + 1) % 4;
      }
      batch[1].input[0] += 3.0;
      weighted_batch_loss_grad(head, batch, w, perturbed);
      CHECK(base == perturbed);
    }
    SUBCASE("doubling every weight doubles loss and gradient exactly") {
      SurrogateHead g1(s), g2(s);
      const double l1 = weighted_batch_loss_grad(head, batch, w, g1);
      const double l2 = weighted_batch_loss_grad(head, batch, std::vector<double>{1.4, 0.0, 2.6}, g2);
      CHECK(l2 == 2.0 * l1);
      for (std::size_t i = 0; i < g1.values().size(); ++i) CHECK(g2.values()[i] == 2.0 * g1.values()[i]);
    }
    SUBCASE("general scaling is proportional") {
      SurrogateHead g1(s), g3(s);
      const double l1 = weighted_batch_loss_grad(head, batch, w, g1);
      const double l3 = weighted_batch_loss_grad(head, batch, std::vector<double>{0.21, 0.0, 0.39}, g3);
      CHECK(l3 == doctest::Approx(0.3 * l1).epsilon(1e-13));
      for (std::size_t i = 0; i < g1.values().size(); ++i) {
        CHECK(g3.values()[i] == doctest::Approx(0.3 * g1.values()[i]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("untrained head predicts token zero everywhere") {
    const Corpus corpus = fixture::tiny_corpus(7);
    const HeadShape s{2 * 6 + 8, 12, Verbalizer::kSequenceLength, 8};
    const SurrogateHead head = SurrogateHead::initialize(s, 1);
    const std::vector<int> tokens = predict_tokens(head, head_input(corpus[0], 6));
    CHECK(tokens == std::vector<int>(Verbalizer::kSequenceLength, 0));
    const Verbalizer v;
    CHECK(predict(head, corpus[0], corpus.header()) == v.decode(0, 0));
  }

  TEST_CASE("head input layout") {
    const Corpus corpus = fixture::tiny_corpus(7);
    for (const FeatureSample& s : corpus.samples()) {
      const std::vector<double> x = head_input(s, 6);
      REQUIRE(x.size() == 20);
      CHECK(std::equal(s.h_v.begin(), s.h_v.end(), x.begin()));
      if (s.h_a) {
        CHECK(std::equal(s.h_a->begin(), s.h_a->end(), x.begin() + 6));
      } else {
        CHECK(std::all_of(x.begin() + 6, x.begin() + 12, [](double v) { return v == 0.0; }));
      }
      CHECK(std::equal(s.h_t_raw.begin(), s.h_t_raw.end(), x.begin() + 12));
    }
  }

  TEST_CASE("stage 1 contracts") {
    const Corpus corpus = fixture::tiny_corpus(8);
    QaConfig qc;
    qc.steps = 20;
    qc.batch_size = 8;
    const QaParams qa = train_stage0(corpus, qc).params;
    const WeightFile weights = build_weight_file(corpus, qa, WeightMapConfig{});

    SUBCASE("deterministic") {
      const TrainRun a = train_stage1(corpus, &weights, quick_head(3));
      const TrainRun b = train_stage1(corpus, &weights, quick_head(3));
      CHECK(head_checksum(a.head) == head_checksum(b.head));
      CHECK(a.loss_trace == b.loss_trace);
      CHECK(a.weight_source == qa_checksum(qa));
      CHECK(a.loss_trace.size() == 30);
    }
    SUBCASE("all-ones weights reproduce uniform mode") {
      const WeightFile ones = build_weight_file(corpus, qa, WeightMapConfig{1.0, 1.0, 1.0});
      const TrainRun u = train_stage1(corpus, nullptr, quick_head(3));
      const TrainRun w = train_stage1(corpus, &ones, quick_head(3));
      CHECK(u.loss_trace == w.loss_trace);
      CHECK(u.head == w.head);
      CHECK(u.weight_source == "uniform");
    }
    SUBCASE("frozen scorer and features") {
      const std::string qa_before = qa_checksum(qa), features_before = feature_checksum(corpus);
      train_stage1(corpus, &weights, quick_head(3));
      CHECK(qa_checksum(qa) == qa_before);
      CHECK(feature_checksum(corpus) == features_before);
    }
    SUBCASE("weight file bound to another corpus") {
      const Corpus other = fixture::tiny_corpus(9);
      CHECK_THROWS_WITH_AS(train_stage1(other, &weights, quick_head(3)),
                           "weight file was exported for a different corpus", Error);
    }
    SUBCASE("missing weight entry") {
      WeightFile holed = weights;
      holed.entries.erase(std::find_if(holed.entries.begin(), holed.entries.end(),
                                       [](const WeightEntry& e) { return e.origin == Origin::kAugmented; }));
      CHECK_THROWS_AS(train_stage1(corpus, &holed, quick_head(3)), Error);
    }
    SUBCASE("config errors") {
      HeadConfig c = quick_head(3);
      c.steps = 0;
      CHECK_THROWS_AS(train_stage1(corpus, nullptr, c), ConfigError);
      c = quick_head(3);
      c.use_originals = c.use_augmented = false;
      CHECK_THROWS_AS(train_stage1(corpus, nullptr, c), ConfigError);
      c = quick_head(3);
      c.original_fraction = 0.0;
      CHECK_THROWS_AS(train_stage1(corpus, nullptr, c), ConfigError);
    }
  }

  TEST_CASE("a head memorizes a two-sample corpus") {
    CorpusHeader header;
    header.d = 3;
    header.d_t = 4;
    header.generator_version = "test";
    const Verbalizer v;
    auto sample = [&](std::string id, double y, double feature) {
      FeatureSample s;
      s.id = std::move(id);
      s.h_v.assign(3, feature);
      s.h_a = std::vector<double>(3, -feature);
      s.h_t_raw.assign(4, feature);
      s.sentiment = y;
      s.polarity = derive_polarity(y);
      s.target_tokens = v.encode(y);
      return s;
    };
    const Corpus corpus(header, {sample("a", 0.9, 1.0), sample("b", -0.5, -1.0)});
    HeadConfig c;
    c.steps = 300;
    c.batch_size = 2;
    c.lr = 0.05;
    const TrainRun run = train_stage1(corpus, nullptr, c);
    for (const FeatureSample& s : corpus.samples()) {
      const std::vector<int> tokens = predict_tokens(run.head, head_input(s, 3));
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (s.target_tokens[t] != kIgnoreIndex) CHECK(tokens[t] == s.target_tokens[t]);
      }
      CHECK(predict(run.head, s, header) == v.decode(s.target_tokens[0], s.target_tokens[1]));
    }
  }

  TEST_CASE("prediction is pure and thread-consistent") {
    const Corpus corpus = fixture::tiny_corpus(10);
    const TrainRun run = train_stage1(corpus, nullptr, quick_head(4));
    const std::vector<double> seq = predict_corpus(run.head, corpus, 1);
    CHECK(predict_corpus(run.head, corpus, 4) == seq);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      CHECK(predict(run.head, corpus[i], corpus.header()) == seq[i]);
    }
  }

  TEST_CASE("artifacts") {
    const Corpus corpus = fixture::tiny_corpus(11);
    const TrainRun run = train_stage1(corpus, nullptr, quick_head(5));
    const HeadSnapshot snap{corpus.header(), run.head};
    const std::string text = serialize_head_snapshot(snap);
    const HeadSnapshot back = parse_head_snapshot(text);
    CHECK(back.head == run.head);
    CHECK(back.header == corpus.header());
    CHECK(serialize_head_snapshot(back) == text);

    const auto path = fixture::scratch("head") / "head.json";
    save_head_snapshot(snap, path);
    CHECK(load_head_snapshot(path).head == run.head);
    CHECK_THROWS_AS(parse_head_snapshot("{\"format\":\"qualmix-head/0\"}"), Error);

    const std::vector<double> trace{0.5, 0.25};
    CHECK(serialize_run_log(trace) == "{\"step\":0,\"loss\":0.5}\n{\"step\":1,\"loss\":0.25}\n");
  }
}
