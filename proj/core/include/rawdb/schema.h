// Copyright 2026 The rawdb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rawdb {

enum class AttrType : std::uint8_t { kInt64 = 0, kFloat64 = 1, kText = 2 };

std::string_view attr_type_name(AttrType type);
AttrType parse_attr_type(std::string_view name);

inline bool is_numeric(AttrType type) { return type != AttrType::kText; }

// A typed scalar. monostate is SQL NULL and only appears in aggregate output
// (MIN/MAX over an empty input); raw records never produce it.
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

// Three-way comparison. Numbers compare by numeric value across int/float,
// text compares bytewise, NULL sorts first. NaN compares unordered and is
// reported as `std::partial_ordering::unordered`.
std::partial_ordering compare_values(const Value& a, const Value& b);

// Total order for sorting: like compare_values, but NaN sorts after every
// other number so sorts stay deterministic.
int total_compare(const Value& a, const Value& b);

bool values_equal(const Value& a, const Value& b);

std::string value_to_string(const Value& v);

// Parses raw field bytes as `type`. Leading/trailing whitespace and a leading
// '+' are rejected; the writer never emits them. Text always succeeds.
std::optional<Value> parse_value(std::string_view field, AttrType type);
std::optional<std::int64_t> parse_int64(std::string_view field);
std::optional<double> parse_float64(std::string_view field);

struct Attribute {
  std::string name;
  AttrType type = AttrType::kInt64;
  // Known generator range [min, max), used for selectivity estimation.
  std::optional<std::pair<double, double>> value_range;

  bool operator==(const Attribute&) const = default;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Attribute> attrs);

  // "a0,a1,..." all int64; the shape datagen produces.
  static Schema uniform_int(std::size_t arity, std::string_view prefix = "a");

  // Parses "name:type,name:type". A bare name defaults to int64.
  static Schema parse(std::string_view text);
  std::string to_string() const;

  std::size_t size() const { return attrs_.size(); }
  bool empty() const { return attrs_.empty(); }
  const Attribute& operator[](std::size_t i) const { return attrs_[i]; }
  Attribute& operator[](std::size_t i) { return attrs_[i]; }
  const std::vector<Attribute>& attributes() const { return attrs_; }

  std::optional<std::uint32_t> index_of(std::string_view name) const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<Attribute> attrs_;
};

}  // namespace rawdb
