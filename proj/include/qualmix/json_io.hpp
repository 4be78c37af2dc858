// Copyright 2026 The qualmix Authors
// SPDX-License-Identifier: Apache-2.0

// Byte-stable JSON emission helpers and small file utilities. Parsing goes
// through nlohmann::json; emission of numeric arrays is done by hand so the
// float formatting is fixed regardless of library version.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"

namespace qualmix::json_io {

using Json = nlohmann::json;

// Shortest decimal that parses back to the same double. Always carries a
// '.' or exponent so readers see a float (this keeps -0.0 intact).
void append_shortest(std::string& out, double value);
// 17 significant digits, same float-marker rule.
void append_fixed17(std::string& out, double value);
void append_string(std::string& out, std::string_view s);
void append_array(std::string& out, std::span<const double> values);

std::string read_file(const std::filesystem::path& path);
// Writes via a sibling temporary and rename. Throws Error when unwritable.
void write_file(const std::filesystem::path& path, std::string_view contents);

Json parse(std::string_view text, std::string_view what);

// Typed field access with readable errors.
const Json& field(const Json& obj, std::string_view key, std::string_view what);
double number(const Json& v, std::string_view what);
std::int64_t integer(const Json& v, std::string_view what);

// Rejects keys not in `allowed`.
void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view what);

}  // namespace qualmix::json_io
