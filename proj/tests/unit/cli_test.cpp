// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qualmix/cli.hpp"
#include "qualmix/json_io.hpp"
#include "support/fixtures.hpp"

using namespace qualmix;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

constexpr const char* kTinyConfig = R"({
  "corpus": {"n_originals": 24, "augments_per_original": 2, "d": 6, "d_t": 8,
             "latent": {"nuisance_rank": 3}},
  "qa": {"steps": 20, "batch_size": 8},
  "head": {"steps": 20, "batch_size": 8},
  "seeds": [1]
})";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    const Result help = run({"--help"});
    CHECK(help.code == 0);
    for (const char* sub : {"gen-corpus", "stage0", "score", "stage1", "eval", "report", "pipeline"}) {
      CHECK(help.out.find(sub) != std::string::npos);
    }
    CHECK(run({"stage1", "--help"}).code == 0);
    CHECK(run({}).code == 1);
    CHECK(run({"train"}).code == 1);
    CHECK(run({"gen-corpus", "--out", "x.jsonl"}).code == 1);  // --seed is required
    CHECK(run({"gen-corpus", "--seed", "1", "--out", "x.jsonl", "--bogus"}).code == 1);
    const Result neither = run({"stage1", "--corpus", "c", "--seed", "1", "--out", "h"});
    CHECK(neither.code == 1);
    CHECK(neither.err.find("--weights or --uniform") != std::string::npos);
    CHECK(run({"stage1", "--corpus", "c", "--seed", "1", "--out", "h", "--uniform", "--weights", "w"})
              .code == 1);
    CHECK(run({"--kernels", "sse9", "report", "--report", "r.json"}).code == 1);
  }

  TEST_CASE("generation is reproducible") {
    const auto dir = fixture::scratch("cli-gen");
    const std::string cfg = (dir / "tiny.json").string();
    json_io::write_file(cfg, kTinyConfig);
    const std::string a = (dir / "a.jsonl").string(), b = (dir / "b.jsonl").string();
    CHECK(run({"gen-corpus", "--seed", "7", "--config", cfg, "--out", a}).code == 0);
    CHECK(run({"gen-corpus", "--seed", "7", "--config", cfg, "--out", b}).code == 0);
    CHECK(json_io::read_file(a) == json_io::read_file(b));
    const Result j = run({"--json", "gen-corpus", "--seed", "8", "--config", cfg, "--out", b});
    CHECK(j.code == 0);
    CHECK(nlohmann::json::parse(j.out)["out"]["records"].get<int>() == 72);
    CHECK(json_io::read_file(a) != json_io::read_file(b));
  }

  TEST_CASE("staged workflow and exit codes") {
    const auto dir = fixture::scratch("cli-stages");
    auto p = [&](const char* name) { return (dir / name).string(); };
    json_io::write_file(p("tiny.json"), kTinyConfig);
    REQUIRE(run({"gen-corpus", "--seed", "3", "--config", p("tiny.json"), "--out", p("train.jsonl"),
                 "--test-out", p("test.jsonl"), "--test-fraction", "0.25"})
                .code == 0);
    REQUIRE(run({"stage0", "--corpus", p("train.jsonl"), "--seed", "3", "--config", p("tiny.json"),
                 "--out", p("qa.json"), "--log", p("qa.log")})
                .code == 0);
    REQUIRE(run({"score", "--corpus", p("train.jsonl"), "--qa", p("qa.json"), "--out", p("w.json")}).code ==
            0);
    REQUIRE(run({"stage1", "--corpus", p("train.jsonl"), "--weights", p("w.json"), "--seed", "3",
                 "--config", p("tiny.json"), "--out", p("head.json")})
                .code == 0);
    const Result ev = run({"--json", "eval", "--head", p("head.json"), "--corpus", p("test.jsonl"), "--qa",
                           p("qa.json")});
    REQUIRE(ev.code == 0);
    const auto j = nlohmann::json::parse(ev.out);
    CHECK(j["acc2"].get<double>() >= 0.0);
    CHECK(j.contains("qa"));

    SUBCASE("weights from another corpus exit 2") {
      REQUIRE(run({"gen-corpus", "--seed", "4", "--config", p("tiny.json"), "--out", p("other.jsonl")})
                  .code == 0);
      const Result r = run({"stage1", "--corpus", p("other.jsonl"), "--weights", p("w.json"), "--seed",
                            "3", "--out", p("h2.json")});
      CHECK(r.code == 2);
      CHECK(r.err.find("weight file was exported for a different corpus") != std::string::npos);
    }
    SUBCASE("missing input exits 2") {
      CHECK(run({"stage0", "--corpus", p("nope.jsonl"), "--seed", "1", "--out", p("q.json")}).code == 2);
    }
    SUBCASE("invalid settings exit 1") {
      CHECK(run({"stage0", "--corpus", p("train.jsonl"), "--seed", "1", "--out", p("q.json"), "--rho",
                 "2"})
                .code == 1);
      CHECK(run({"score", "--corpus", p("train.jsonl"), "--qa", p("qa.json"), "--out", p("w2.json"),
                 "--w-min", "3"})
                .code == 1);
    }
    SUBCASE("uniform mode") {
      CHECK(run({"stage1", "--corpus", p("train.jsonl"), "--uniform", "--seed", "3", "--out",
                 p("hu.json"), "--pool", "original", "--steps", "5"})
                .code == 0);
    }
  }

  TEST_CASE("pipeline and report") {
    const auto dir = fixture::scratch("cli-pipeline");
    auto p = [&](const char* name) { return (dir / name).string(); };
    json_io::write_file(p("tiny.json"), kTinyConfig);
    const Result r = run({"pipeline", "--config", p("tiny.json"), "--report-dir", p("out"), "--dump-csv",
                          p("rows.csv")});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("weighted") != std::string::npos);
    CHECK(std::filesystem::exists(p("rows.csv")));
    const Result rep = run({"--json", "report", "--report", p("out/report.json")});
    CHECK(rep.code == 0);
    CHECK(rep.out == json_io::read_file(p("out/report.json")));
    json_io::write_file(p("bad.json"), R"({"seedz": [1]})");
    CHECK(run({"pipeline", "--config", p("bad.json")}).code == 1);
  }
}
