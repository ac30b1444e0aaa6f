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

#include "rawdb/schema.h"

#include <charconv>
#include <cmath>
#include <compare>

#include <fmt/format.h>

#include "rawdb/error.h"

namespace rawdb {

std::string_view attr_type_name(AttrType type) {
  switch (type) {
    case AttrType::kInt64:
      return "int64";
    case AttrType::kFloat64:
      return "float64";
    case AttrType::kText:
      return "text";
  }
  return "text";
}

AttrType parse_attr_type(std::string_view name) {
  if (name == "int64" || name == "int" || name == "bigint") return AttrType::kInt64;
  if (name == "float64" || name == "float" || name == "double") return AttrType::kFloat64;
  if (name == "text" || name == "string" || name == "varchar") return AttrType::kText;
  throw_error(ErrorCode::kInvalidArgument, fmt::format("unknown attribute type '{}'", name));
}

namespace {

// Rank of the variant alternative in sort order: NULL < numbers < text.
int type_rank(const Value& v) {
  switch (v.index()) {
    case 0:
      return 0;
    case 1:
    case 2:
      return 1;
    default:
      return 2;
  }
}

double as_double(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

}  // namespace

std::partial_ordering compare_values(const Value& a, const Value& b) {
  const int ra = type_rank(a);
  const int rb = type_rank(b);
  if (ra != rb) return ra <=> rb;
  switch (ra) {
    case 0:
      return std::partial_ordering::equivalent;
    case 1: {
      const auto* ia = std::get_if<std::int64_t>(&a);
      const auto* ib = std::get_if<std::int64_t>(&b);
      if (ia && ib) return *ia <=> *ib;
      return as_double(a) <=> as_double(b);
    }
    default:
      return std::get<std::string>(a) <=> std::get<std::string>(b);
  }
}

int total_compare(const Value& a, const Value& b) {
  const auto ord = compare_values(a, b);
  if (ord == std::partial_ordering::less) return -1;
  if (ord == std::partial_ordering::greater) return 1;
  if (ord == std::partial_ordering::equivalent) return 0;
  // Unordered: at least one NaN.
  const bool a_nan = std::isnan(as_double(a));
  const bool b_nan = std::isnan(as_double(b));
  if (a_nan && b_nan) return 0;
  return a_nan ? 1 : -1;
}

bool values_equal(const Value& a, const Value& b) { return total_compare(a, b) == 0; }

std::string value_to_string(const Value& v) {
  switch (v.index()) {
    case 0:
      return "NULL";
    case 1:
      return std::to_string(std::get<std::int64_t>(v));
    case 2: {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof(buf), std::get<double>(v));
      return std::string(buf, res.ptr);
    }
    default:
      return std::get<std::string>(v);
  }
}

std::optional<std::int64_t> parse_int64(std::string_view field) {
  if (field.empty()) return std::nullopt;
  std::int64_t out = 0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return out;
}

std::optional<double> parse_float64(std::string_view field) {
  if (field.empty()) return std::nullopt;
  double out = 0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return out;
}

std::optional<Value> parse_value(std::string_view field, AttrType type) {
  switch (type) {
    case AttrType::kInt64:
      if (auto v = parse_int64(field)) return Value(*v);
      return std::nullopt;
    case AttrType::kFloat64:
      if (auto v = parse_float64(field)) return Value(*v);
      return std::nullopt;
    case AttrType::kText:
      return Value(std::string(field));
  }
  return std::nullopt;
}

Schema::Schema(std::vector<Attribute> attrs) : attrs_(std::move(attrs)) {
  for (std::size_t i = 0; i < attrs_.size(); ++i) {
    if (attrs_[i].name.empty()) {
      throw_error(ErrorCode::kInvalidArgument, fmt::format("attribute {} has no name", i));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (attrs_[j].name == attrs_[i].name) {
        throw_error(ErrorCode::kInvalidArgument,
                    fmt::format("duplicate attribute name '{}'", attrs_[i].name));
      }
    }
  }
}

Schema Schema::uniform_int(std::size_t arity, std::string_view prefix) {
  std::vector<Attribute> attrs;
  attrs.reserve(arity);
  for (std::size_t i = 0; i < arity; ++i) {
    attrs.push_back({fmt::format("{}{}", prefix, i), AttrType::kInt64, std::nullopt});
  }
  return Schema(std::move(attrs));
}

Schema Schema::parse(std::string_view text) {
  std::vector<Attribute> attrs;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) {
      throw_error(ErrorCode::kInvalidArgument, "empty attribute in schema");
    }
    Attribute attr;
    const std::size_t colon = item.find(':');
    if (colon == std::string_view::npos) {
      attr.name = std::string(item);
    } else {
      attr.name = std::string(item.substr(0, colon));
      attr.type = parse_attr_type(item.substr(colon + 1));
    }
    attrs.push_back(std::move(attr));
    pos = comma + 1;
  }
  return Schema(std::move(attrs));
}

std::string Schema::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < attrs_.size(); ++i) {
    if (i) out += ',';
    out += attrs_[i].name;
    out += ':';
    out += attr_type_name(attrs_[i].type);
  }
  return out;
}

std::optional<std::uint32_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < attrs_.size(); ++i) {
    if (attrs_[i].name == name) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

}  // namespace rawdb
