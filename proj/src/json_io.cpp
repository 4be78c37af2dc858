// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "qualmix/json_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qualmix/error.hpp"

namespace qualmix::json_io {
namespace {

void ensure_float_marker(std::string& out, std::size_t start) {
  const std::string_view written(out.data() + start, out.size() - start);
  if (written.find_first_of(".eE") == std::string_view::npos) out += ".0";
}

void require_finite(double value) {
  if (!std::isfinite(value)) throw Error("refusing to serialise a non-finite number");
}

}  // namespace

void append_shortest(std::string& out, double value) {
  require_finite(value);
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  const std::size_t start = out.size();
  out.append(buf, res.ptr);
  ensure_float_marker(out, start);
}

void append_fixed17(std::string& out, double value) {
  require_finite(value);
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  const std::size_t start = out.size();
  out.append(buf, res.ptr);
  ensure_float_marker(out, start);
}

void append_string(std::string& out, std::string_view s) { out += Json(std::string(s)).dump(); }

void append_array(std::string& out, std::span<const double> values) {
  out.push_back('[');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) out.push_back(',');
    append_shortest(out, values[i]);
  }
  out.push_back(']');
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot write '" + path.string() + "'");
  }
}

Json parse(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw Error(std::string(what) + ": invalid JSON (" + e.what() + ")");
  }
}

const Json& field(const Json& obj, std::string_view key, std::string_view what) {
  if (!obj.is_object()) throw Error(std::string(what) + ": expected a JSON object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw Error(std::string(what) + ": missing field '" + std::string(key) + "'");
  return *it;
}

double number(const Json& v, std::string_view what) {
  if (!v.is_number()) throw Error(std::string(what) + ": expected a number");
  return v.get<double>();
}

std::int64_t integer(const Json& v, std::string_view what) {
  if (!v.is_number_integer()) throw Error(std::string(what) + ": expected an integer");
  return v.get<std::int64_t>();
}

void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view what) {
  if (!obj.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace qualmix::json_io
