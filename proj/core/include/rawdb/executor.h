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
#include <vector>

#include "rawdb/block_store.h"
#include "rawdb/hll.h"
#include "rawdb/planner.h"
#include "rawdb/scan.h"

namespace rawdb {

// Deterministic position of a row: block ordinal, row within the block, and
// the matching build row for joins.
struct RowPos {
  std::uint32_t ordinal = 0;
  std::uint64_t row = 0;
  std::uint32_t sub = 0;

  auto operator<=>(const RowPos&) const = default;
};

struct PositionedRow {
  RowPos pos;
  std::vector<Value> values;

  bool operator==(const PositionedRow&) const = default;
};

// Mergeable state of one aggregate over one group.
struct AggState {
  std::uint64_t count = 0;
  std::int64_t int_sum = 0;
  double float_sum = 0;
  Value min;
  Value max;
  std::optional<HllSketch> sketch;
  // Exact COUNT(DISTINCT) values. update() appends; merge() and finalize()
  // work on the sorted, deduplicated set.
  std::vector<Value> distinct;

  void update(const AggCall& call, const Value& v, bool exact_distinct, std::uint8_t precision);
  void merge(const AggCall& call, const AggState& other);
  Value finalize(const AggCall& call) const;

  bool operator==(const AggState&) const = default;
};

struct GroupState {
  std::vector<Value> key;
  std::vector<AggState> states;

  bool operator==(const GroupState&) const = default;
};

struct PartialResult {
  std::string query_id;
  std::uint32_t fragment_id = 0;
  std::uint32_t ordinal = 0;
  FragmentKind kind = FragmentKind::kRows;
  // kRows and kTopK, ordered by position (top-k: by rank).
  std::vector<PositionedRow> rows;
  // kAggregate, ordered by key.
  std::vector<GroupState> groups;
  ScanCounters counters;
  AccessPath access = AccessPath::kFull;
  bool pm_used = false;

  bool operator==(const PartialResult&) const = default;
};

// Total order on values: NULL first, numbers across int/float, NaN after
// other numbers, then text.
struct ValueLess {
  bool operator()(const Value& a, const Value& b) const { return total_compare(a, b) < 0; }
};
struct RowLess {
  bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const;
};

// Ranking for ORDER BY: sort value in the requested direction, then
// position ascending.
bool ranks_before(const SortSpec& sort, const PositionedRow& a, const PositionedRow& b);

// Runs one fragment over a block through `scanner`. Index access uses the
// index in `indexes` keyed on scan.index_attr; when it is missing or does
// not cover the block the fragment falls back to a full scan. Scan errors
// are rethrown with the block id attached.
PartialResult execute_fragment(const FragmentRequest& request, BlockScanner& scanner,
                               const std::vector<VerticalIndex>* indexes);

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<AttrType> column_types;
  std::vector<std::vector<Value>> rows;
  bool approximate = false;

  bool operator==(const ResultSet&) const = default;
};

// Combines fragment partials into the final result. Duplicate fragment ids
// are dropped (first wins); a missing id raises kIncompleteResult.
ResultSet merge_partials(const PhysicalPlan& plan, std::vector<PartialResult> partials,
                         std::size_t expected_fragments);

// Build phase of a join: qualifying build rows in position order.
std::vector<std::vector<Value>> collect_build_rows(std::vector<PartialResult> partials,
                                                   std::size_t expected_fragments);

// Drops duplicate fragment ids and checks that 0..expected-1 are present.
std::vector<PartialResult> dedup_partials(std::vector<PartialResult> partials,
                                          std::size_t expected_fragments);

}  // namespace rawdb
