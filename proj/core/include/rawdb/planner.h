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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rawdb/hll.h"
#include "rawdb/scan.h"
#include "rawdb/sql.h"
#include "rawdb/table.h"

namespace rawdb {

enum class UseIndex : std::uint8_t { kAuto, kOn, kOff };

std::string_view use_index_name(UseIndex mode);
UseIndex parse_use_index(std::string_view text);

inline constexpr double kDefaultTau = 0.01;
inline constexpr double kDefaultSelectivity = 0.001;

struct QueryOptions {
  UseIndex use_index = UseIndex::kAuto;
  // Index path is chosen in auto mode when estimated selectivity < tau.
  double tau = kDefaultTau;
  bool exact_distinct = false;
  // Off disables positional maps and learned positions: the no-metadata
  // baseline.
  bool use_pm = true;
  bool learn_positions = true;
  // Per-fragment redirection timeout; 0 selects the adaptive default.
  std::uint64_t timeout_ms = 0;

  // Applies `SET name = value` (use_index, tau, exact_distinct, use_pm,
  // learn_positions, timeout_ms). Throws kInvalidArgument.
  void apply(const SetStatement& set);

  bool operator==(const QueryOptions&) const = default;
};

using TableLookup = std::function<std::shared_ptr<const TableDescriptor>(std::string_view)>;

enum class FragmentKind : std::uint8_t { kRows, kTopK, kAggregate };

std::string_view fragment_kind_name(FragmentKind kind);

struct AggCall {
  AggFn fn = AggFn::kCount;
  // Index into the fragment row; unset for COUNT(*).
  std::optional<std::uint32_t> column;
  AttrType type = AttrType::kInt64;

  bool operator==(const AggCall&) const = default;
};

struct SortSpec {
  std::uint32_t column = 0;
  bool descending = false;

  bool operator==(const SortSpec&) const = default;
};

// What a fragment does with its rows. A fragment row is the scan projection
// of the probe table, followed by the matching build row for joins.
struct OperatorSpec {
  FragmentKind kind = FragmentKind::kRows;
  std::vector<std::uint32_t> group_columns;
  std::vector<AggCall> aggregates;
  std::optional<SortSpec> sort;
  // k for top-k; a per-fragment row cap for kRows.
  std::optional<std::uint64_t> limit;
  bool exact_distinct = false;
  std::uint8_t hll_precision = HllSketch::kDefaultPrecision;

  bool operator==(const OperatorSpec&) const = default;
};

// Broadcast build side shipped with every probe fragment.
struct JoinProbe {
  std::uint32_t probe_key = 0;
  std::uint32_t build_key = 0;
  std::vector<std::vector<Value>> build_rows;

  bool operator==(const JoinProbe&) const = default;
};

// The unit of work sent to a worker; idempotent by (query_id, fragment_id).
struct FragmentRequest {
  std::string query_id;
  std::uint32_t fragment_id = 0;
  Schema schema;
  BlockMeta data_block;
  std::optional<BlockMeta> pm_block;
  std::optional<BlockMeta> vi_block;
  ScanRequest scan;
  OperatorSpec op;
  std::optional<JoinProbe> join;
  bool use_pm = true;
  bool learn_positions = true;

  bool operator==(const FragmentRequest&) const = default;
};

struct TableAccessPlan {
  std::shared_ptr<const TableDescriptor> table;
  AccessPath access = AccessPath::kFull;
  std::optional<std::uint32_t> index_attr;
  // Estimate for the best index candidate, or for the whole predicate when
  // no vertical index applies.
  double selectivity = 1.0;
  // "range", "ndv", "default" or "none".
  std::string selectivity_source = "none";
  std::vector<std::uint32_t> vi_candidates;
  std::vector<Comparison> predicate;
  std::vector<std::uint32_t> projection;
};

struct PhysicalPlan {
  QueryOptions options;
  // The FROM table, or the probe side of a join.
  TableAccessPlan probe;
  std::optional<TableAccessPlan> build;
  // Join keys as indices into the probe and build projections.
  std::uint32_t probe_key = 0;
  std::uint32_t build_key = 0;
  std::string build_reason;

  OperatorSpec op;
  // Ordering of final rows: fragment rows for kRows/kTopK, group key columns
  // followed by aggregate results for kAggregate.
  std::optional<SortSpec> final_sort;
  std::optional<std::uint64_t> limit;
  std::vector<std::string> columns;
  std::vector<AttrType> column_types;
  std::vector<std::uint32_t> output_map;
  bool approximate = false;
};

struct SelectivityEstimate {
  double value = kDefaultSelectivity;
  std::string source = "default";
};

// Fraction of rows expected to satisfy every comparison on one attribute:
// the interval fraction over the attribute's value range when known, 1/ndv
// for equality when statistics exist, else the default.
SelectivityEstimate estimate_selectivity(const Attribute& attr, std::uint32_t attr_index,
                                         const std::vector<Comparison>& conditions,
                                         const TableStatistics* stats);

// Binds and plans a SELECT. Throws kPlan for unknown tables or columns,
// type errors, and ungrouped columns beside aggregates.
PhysicalPlan plan_query(const SelectQuery& query, const TableLookup& lookup,
                        const QueryOptions& options);

// One fragment per data block of `access.table`, ids 0..n-1.
std::vector<FragmentRequest> make_fragments(const TableAccessPlan& access, const OperatorSpec& op,
                                            const std::string& query_id,
                                            const QueryOptions& options,
                                            const std::optional<JoinProbe>& join = std::nullopt);

// Operator for the build phase of a join: every qualifying row, unordered.
OperatorSpec build_phase_operator();

// Human-readable plan: access path and its inputs per table, fragment
// counts, and the join build side.
std::vector<std::string> explain_plan(const PhysicalPlan& plan);

}  // namespace rawdb
