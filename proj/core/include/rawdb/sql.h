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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rawdb/scan.h"
#include "rawdb/schema.h"

namespace rawdb {

enum class AggFn : std::uint8_t { kCount, kCountDistinct, kSum, kAvg, kMin, kMax };

std::string_view agg_fn_name(AggFn fn);

struct SourcePos {
  std::size_t line = 1;
  std::size_t column = 1;
  bool operator==(const SourcePos&) const = default;
};

struct ColumnRef {
  // Empty when unqualified.
  std::string table;
  std::string name;
  SourcePos pos;

  std::string to_string() const { return table.empty() ? name : table + "." + name; }
  bool operator==(const ColumnRef&) const = default;
};

struct Aggregate {
  AggFn fn = AggFn::kCount;
  // Unset for COUNT(*).
  std::optional<ColumnRef> arg;

  std::string to_string() const;
  bool operator==(const Aggregate&) const = default;
};

struct SelectItem {
  enum class Kind : std::uint8_t { kStar, kColumn, kAggregate };
  Kind kind = Kind::kColumn;
  ColumnRef column;
  Aggregate aggregate;
  std::string alias;

  bool operator==(const SelectItem&) const = default;
};

// `column op literal`; a literal on the left is normalized by flipping op.
struct Condition {
  ColumnRef column;
  CompareOp op = CompareOp::kEq;
  Value literal;

  bool operator==(const Condition&) const = default;
};

struct JoinClause {
  std::string table;
  ColumnRef left;
  ColumnRef right;

  bool operator==(const JoinClause&) const = default;
};

struct OrderBy {
  // A column, an aggregate, or the alias of a select item (as a column).
  std::variant<ColumnRef, Aggregate> key;
  bool descending = false;

  bool operator==(const OrderBy&) const = default;
};

struct SelectQuery {
  std::vector<SelectItem> items;
  std::string table;
  std::optional<JoinClause> join;
  std::vector<Condition> where;
  std::vector<ColumnRef> group_by;
  std::optional<OrderBy> order_by;
  std::optional<std::uint64_t> limit;

  bool operator==(const SelectQuery&) const = default;
};

struct SetStatement {
  std::string name;
  std::string value;

  bool operator==(const SetStatement&) const = default;
};

struct Statement {
  bool explain = false;
  std::variant<SelectQuery, SetStatement> body;

  bool is_set() const { return std::holds_alternative<SetStatement>(body); }
  const SelectQuery& select() const { return std::get<SelectQuery>(body); }
};

// Grammar (keywords case-insensitive, optional trailing ';'):
//   [EXPLAIN] SELECT item {, item} FROM t [[INNER] JOIN t2 ON a = b]
//     [WHERE cond {AND cond}] [GROUP BY col {, col}]
//     [ORDER BY expr [ASC|DESC]] [LIMIT n]
//   SET name = value
// item: * | col | agg [[AS] alias]; cond: col op lit | lit op col |
// col BETWEEN lit AND lit. Throws SyntaxError; constructs outside the subset
// (OR, NOT, subqueries, outer joins, DISTINCT rows, HAVING, ...) raise it
// with ErrorCode::kUnsupported and name the construct.
Statement parse_statement(std::string_view sql);

// Convenience for callers that only accept SELECT.
SelectQuery parse_select(std::string_view sql);

}  // namespace rawdb
