// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "qualmix/error.hpp"
#include "qualmix/json_io.hpp"
#include "qualmix/rng.hpp"

namespace jio = qualmix::json_io;

TEST_SUITE("json_io") {
  TEST_CASE("shortest form round trips and keeps a float marker") {
    std::string out;
    jio::append_shortest(out, 1.0);
    CHECK(out == "1.0");
    out.clear();
    jio::append_shortest(out, -0.0);
    CHECK(out == "-0.0");
    out.clear();
    jio::append_shortest(out, 0.1);
    CHECK(out == "0.1");
    out.clear();
    jio::append_shortest(out, 1e300);
    CHECK(out == "1e+300");

    qualmix::Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
      const double v = rng.normal() * std::pow(10.0, rng.uniform(-30.0, 30.0));
      std::string s;
      jio::append_shortest(s, v);
      CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
  }

  TEST_CASE("fixed17 form") {
    std::string out;
    jio::append_fixed17(out, 0.1);
    CHECK(out == "0.10000000000000001");
    out.clear();
    jio::append_fixed17(out, 2.0);
    CHECK(out == "2.0");
  }

  TEST_CASE("non-finite values are refused") {
    std::string out;
    CHECK_THROWS_AS(jio::append_shortest(out, std::numeric_limits<double>::quiet_NaN()),
                    qualmix::Error);
    CHECK_THROWS_AS(jio::append_fixed17(out, std::numeric_limits<double>::infinity()),
                    qualmix::Error);
  }

  TEST_CASE("strings and arrays") {
    std::string out;
    jio::append_string(out, "a\"b\n");
    CHECK(out == "\"a\\\"b\\n\"");
    out.clear();
    const std::vector<double> v{1.0, -2.5, 3e-7};
    jio::append_array(out, v);
    CHECK(out == "[1.0,-2.5,3e-07]");
    out.clear();
    jio::append_array(out, std::vector<double>{});
    CHECK(out == "[]");
  }

  TEST_CASE("typed field access") {
    const auto j = jio::parse(R"({"a":1,"b":2.5,"c":"x"})", "doc");
    CHECK(jio::integer(jio::field(j, "a", "doc"), "a") == 1);
    CHECK(jio::number(jio::field(j, "b", "doc"), "b") == 2.5);
    CHECK_THROWS_AS(jio::field(j, "z", "doc"), qualmix::Error);
    CHECK_THROWS_AS(jio::integer(jio::field(j, "b", "doc"), "b"), qualmix::Error);
    CHECK_THROWS_AS(jio::number(jio::field(j, "c", "doc"), "c"), qualmix::Error);
    CHECK_THROWS_AS(jio::parse("{", "doc"), qualmix::Error);
  }

  TEST_CASE("unknown keys are config errors") {
    const auto j = jio::parse(R"({"a":1,"extra":2})", "doc");
    CHECK_NOTHROW(jio::reject_unknown_keys(j, {"a", "extra"}, "doc"));
    CHECK_THROWS_AS(jio::reject_unknown_keys(j, {"a"}, "doc"), qualmix::ConfigError);
  }

  TEST_CASE("file helpers") {
    const auto dir = std::filesystem::temp_directory_path() / "qualmix_json_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "f.txt";
    jio::write_file(path, "hello\n");
    CHECK(jio::read_file(path) == "hello\n");
    CHECK_FALSE(std::filesystem::exists(dir / "f.txt.tmp"));
    CHECK_THROWS_AS(jio::read_file(dir / "missing"), qualmix::Error);
    CHECK_THROWS_AS(jio::write_file(dir / "no" / "such" / "dir.txt", "x"), qualmix::Error);
    std::filesystem::remove_all(dir);
  }
}
