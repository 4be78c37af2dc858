// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qualmix/error.hpp"
#include "qualmix/json_io.hpp"
#include "qualmix/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace qualmix;

namespace {

constexpr const char* kTinyConfig = R"({
  "corpus": {"n_originals": 24, "augments_per_original": 2, "d": 6, "d_t": 8,
             "latent": {"nuisance_rank": 3}},
  "qa": {"steps": 20, "batch_size": 8},
  "head": {"steps": 20, "batch_size": 8},
  "seeds": [1, 2]
})";

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config defaults and overrides") {
    const PipelineConfig d = parse_pipeline_config("{}");
    const PipelineConfig ref;
    CHECK(d.test_fraction == ref.test_fraction);
    CHECK(d.seeds == ref.seeds);
    CHECK(d.arms == ref.arms);
    CHECK(d.weights == ref.weights);
    CHECK(d.corpus.n_originals == ref.corpus.n_originals);
    CHECK(d.qa.steps == ref.qa.steps);

    const PipelineConfig c = parse_pipeline_config(kTinyConfig);
    CHECK(c.corpus.n_originals == 24);
    CHECK(c.corpus.latent.nuisance_rank == 3);
    CHECK(c.corpus.latent.signal == ref.corpus.latent.signal);
    CHECK(c.qa.steps == 20);
    CHECK(c.head.batch_size == 8);
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});

    const PipelineConfig w = parse_pipeline_config(
        R"({"weights": {"w_min": 0, "gamma": 2}, "arms": ["uniform", "weighted"], "qa": {"alpha": [1, 0, 2, 1]}})");
    CHECK(w.weights == WeightMapConfig{0.0, 1.5, 2.0});
    CHECK(w.arms == std::vector<Arm>{Arm::kUniform, Arm::kWeighted});
    CHECK(w.qa.alpha == FamilyWeights{1.0, 0.0, 2.0, 1.0});
  }

  TEST_CASE("config errors") {
    for (const char* bad : {R"({"colour": 1})", R"({"corpus": {"n": 4}})",
                            R"({"corpus": {"profile": {"p_flip": 0.1}}})", R"({"qa": {"epochs": 3}})",
                            R"({"weights": {"w_min": 2, "w_max": 1}})", R"({"test_fraction": 1.0})",
                            R"({"arms": ["weighted", "weighted"]})", R"({"arms": ["best"]})",
                            R"({"seeds": []})", R"({"qa": {"steps": -1}})", R"({"qa": {"steps": "x"}})",
                            R"({"corpus": {"profile": {"sigma_benign": 2}}})", "[1, 2]", "{"}) {
      CAPTURE(bad);
      CHECK_THROWS_AS(parse_pipeline_config(bad), ConfigError);
    }
    CHECK_THROWS_AS(load_pipeline_config(fixture::scratch("cfg-missing") / "none.json"), Error);
  }

  TEST_CASE("config serialization round trips") {
    const PipelineConfig c = parse_pipeline_config(kTinyConfig);
    const std::string text = serialize_pipeline_config(c);
    CHECK(serialize_pipeline_config(parse_pipeline_config(text)) == text);
  }

  TEST_CASE("arm names") {
    for (Arm a : {Arm::kWeighted, Arm::kUniform, Arm::kOriginal, Arm::kAugmented}) {
      CHECK(parse_arm(arm_name(a)) == a);
    }
    CHECK_THROWS_AS(parse_arm("mixed"), ConfigError);
  }

  TEST_CASE("prediction metrics") {
    const std::vector<double> gold{-0.8, -0.1, 0.3, 0.9};
    const ArmMetrics perfect = evaluate_predictions(gold, gold);
    CHECK(perfect.acc2 == 1.0);
    CHECK(perfect.acc5 == 1.0);
    CHECK(perfect.acc7 == 1.0);
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.mae == 0.0);
    CHECK(*perfect.corr == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(perfect.n == 4);

    const ArmMetrics flat = evaluate_predictions(std::vector<double>(4, 0.1), gold);
    CHECK_FALSE(flat.corr.has_value());
    CHECK(flat.acc2 == 0.5);
  }

  TEST_CASE("end-to-end run") {
    PipelineConfig c = parse_pipeline_config(kTinyConfig);
    const PipelineReport r = run_pipeline(c);
    REQUIRE(r.seeds.size() == 2);
    REQUIRE(r.qa_mean.has_value());

    SUBCASE("mean row is the per-seed mean") {
      for (const auto& [arm, m] : r.mean) {
        const ArmMetrics& a = r.seeds[0].arms.at(arm);
        const ArmMetrics& b = r.seeds[1].arms.at(arm);
        CHECK(m.acc2 == (a.acc2 + b.acc2) / 2.0);
        CHECK(m.mae == (a.mae + b.mae) / 2.0);
        CHECK(m.wf1 == (a.wf1 + b.wf1) / 2.0);
        CHECK((m.acc2 >= 0.0 && m.acc2 <= 1.0));
      }
      CHECK(r.mean.size() == 4);
    }
    SUBCASE("report round trip and determinism") {
      const std::string text = serialize_report(r);
      CHECK(parse_report(text) == r);
      CHECK(serialize_report(run_pipeline(c)) == text);
      c.threads = 3;
      CHECK(serialize_report(run_pipeline(c)) == text);
    }
    SUBCASE("rendering") {
      const std::string table = render_report_table(r);
      for (const char* arm : {"weighted", "uniform", "original", "augmented"}) {
        CHECK(table.find(arm) != std::string::npos);
      }
      const std::string csv = render_report_csv(r);
      CHECK(csv.rfind("seed,arm,acc2,", 0) == 0);
      CHECK(csv.find("\nmean,weighted,") != std::string::npos);
    }
  }

  TEST_CASE("artifacts land in the report directory") {
    PipelineConfig c = parse_pipeline_config(kTinyConfig);
    c.seeds = {4};
    c.report_dir = fixture::scratch("pipeline-report");
    const PipelineReport r = run_pipeline(c);
    for (const char* f : {"config.json", "report.json", "report.txt", "seed-4/train.jsonl",
                          "seed-4/test.jsonl", "seed-4/qa.json", "seed-4/weights.json"}) {
      CAPTURE(f);
      CHECK(std::filesystem::exists(c.report_dir / f));
    }
    const std::string text = json_io::read_file(c.report_dir / "report.json");
    CHECK(parse_report(text) == r);
    const auto versions = nlohmann::json::parse(text)["versions"];
    CHECK(versions["report"] == kReportVersion);
    CHECK(versions["generator"] == std::string(kGeneratorVersion));
  }

  TEST_CASE("stage failures name the stage") {
    PipelineConfig c = parse_pipeline_config(kTinyConfig);
    c.corpus.n_originals = 2;
    c.test_fraction = 0.9;
    c.seeds = {1};
    try {
      run_pipeline(c);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("stage ") == 0);
      CHECK(std::string(e.what()).find("seed 1") != std::string::npos);
    }
  }
}
