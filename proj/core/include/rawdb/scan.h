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

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rawdb/block_store.h"
#include "rawdb/positional_map.h"
#include "rawdb/schema.h"
#include "rawdb/vertical_index.h"

namespace rawdb {

enum class CompareOp : std::uint8_t { kLt, kLe, kGt, kGe, kEq, kNe };

std::string_view compare_op_symbol(CompareOp op);
CompareOp parse_compare_op(std::string_view symbol);
// a op b  <=>  b flip(op) a
CompareOp flip(CompareOp op);

struct Comparison {
  std::uint32_t attr = 0;
  CompareOp op = CompareOp::kEq;
  Value literal;

  bool operator==(const Comparison&) const = default;
};

// Applies `op` to a value and a literal. Numbers compare numerically across
// int/float; NaN and type mismatches never satisfy a comparison.
bool evaluate(CompareOp op, const Value& value, const Value& literal);

enum class AccessPath : std::uint8_t { kFull, kIndex };

std::string_view access_path_name(AccessPath path);

struct ScanRequest {
  BlockId block;
  std::vector<std::uint32_t> projection;
  // Conjunction.
  std::vector<Comparison> predicate;
  AccessPath access = AccessPath::kFull;
  // Vertical index consulted when access is kIndex.
  std::uint32_t index_attr = 0;
  // Stop after this many emitted rows.
  std::optional<std::uint64_t> limit;

  bool operator==(const ScanRequest&) const = default;
};

struct ScanCounters {
  std::uint64_t rows_examined = 0;
  std::uint64_t rows_emitted = 0;
  // Bytes examined while navigating to attributes and row boundaries.
  std::uint64_t bytes_located = 0;
  // Binary conversions of projected attributes.
  std::uint64_t conversions = 0;
  // Attribute locations served directly by the positional map or the learned
  // positions, versus those that needed separator navigation.
  std::uint64_t pm_hits = 0;
  std::uint64_t pm_misses = 0;
  std::uint64_t parse_errors = 0;

  ScanCounters& operator+=(const ScanCounters& o);
  bool operator==(const ScanCounters&) const = default;
};

struct Anchor {
  std::uint32_t attr = 0;
  // Row-relative offset of the attribute's first byte.
  std::uint32_t offset = 0;
};

// Returns the row-relative offset of the first byte of `target` in `row` (one
// record without its terminator). Attribute 0 at offset 0 is always an
// anchor. Navigation starts at the nearest anchor by attribute distance;
// ties go to the earlier anchor, and anchors above the target are walked
// backward. Throws kInvalidArgument when target >= arity or the row has too
// few separators.
std::uint32_t locate_attr(std::string_view row, std::uint32_t arity, std::uint32_t target,
                          std::span<const Anchor> anchors, std::uint64_t* bytes_examined = nullptr);

// Positions learned while scanning one block, kept in node memory across
// queries. Row-relative attribute offsets use kUnknown for rows not yet seen.
class LearnedPositions {
 public:
  static constexpr std::uint32_t kUnknown = UINT32_MAX;

  struct Column {
    std::vector<std::uint32_t> offsets;
    bool complete = false;
  };

  std::shared_ptr<const std::vector<std::uint64_t>> row_starts() const;
  std::shared_ptr<const Column> column(std::uint32_t attr) const;
  std::map<std::uint32_t, std::shared_ptr<const Column>> columns() const;

  // Lost updates are acceptable: publishing only ever adds known offsets.
  void publish_row_starts(std::vector<std::uint64_t> starts);
  void publish_column(std::uint32_t attr, std::vector<std::uint32_t> offsets);

  std::uint64_t bytes() const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const std::vector<std::uint64_t>> row_starts_;
  std::map<std::uint32_t, std::shared_ptr<const Column>> columns_;
};

// Node-wide cache of learned positions, keyed by data block.
class IncrementalPmCache {
 public:
  explicit IncrementalPmCache(std::uint64_t budget_bytes = 1ULL << 30) : budget_(budget_bytes) {}

  // `version` distinguishes successive tables reusing a name (the data
  // block checksum).
  std::shared_ptr<LearnedPositions> for_block(const BlockId& block, std::uint64_t version = 0);
  bool has_room() const;
  void clear();
  std::uint64_t bytes() const;

 private:
  std::uint64_t budget_;
  mutable std::mutex mu_;
  std::map<std::pair<BlockId, std::uint64_t>, std::shared_ptr<LearnedPositions>> blocks_;
};

struct ScanRow {
  std::uint64_t record = 0;
  std::uint64_t row_offset = 0;
  std::vector<Value> values;
};

// Receives qualifying rows in record order; returning false stops the scan.
using RowSink = std::function<bool(ScanRow&&)>;

struct ScanOptions {
  // Consult learned positions and publish newly located offsets.
  bool learn = true;
};

// In-situ execution over one record-aligned data block. Predicate attributes
// are located and parsed first, in attribute order; projected attributes are
// located and converted only for rows that qualify.
class BlockScanner {
 public:
  // `pm` and `learned` may be null. A PM whose record count does not match
  // the block is ignored.
  BlockScanner(const Schema& schema, std::string_view block, std::uint64_t record_count,
               const PositionalMap* pm, LearnedPositions* learned, ScanOptions options = {});

  ScanCounters full_scan(const ScanRequest& request, const RowSink& sink);

  // One pass over the index entries evaluates key comparisons; only matching
  // rows are read from the data block. Throws kMetadataInconsistency when
  // the index does not cover the block exactly.
  ScanCounters index_scan(const ScanRequest& request, const VerticalIndex& vi, const RowSink& sink);

  bool has_pm() const { return pm_ != nullptr; }

 private:
  struct Plan;
  Plan make_plan(const ScanRequest& request, std::optional<std::uint32_t> index_attr) const;

  const Schema& schema_;
  std::string_view block_;
  std::uint64_t record_count_;
  const PositionalMap* pm_;
  LearnedPositions* learned_;
  ScanOptions options_;
};

// Node-wide cache of decoded metadata blocks shared by every session. A
// missing or undecodable block is cached as absent.
class MetadataCache {
 public:
  // Returns the raw bytes, nullopt if the block does not exist; may throw.
  using Loader = std::function<std::optional<std::string>()>;

  // `version` is the block checksum, so a recreated table never hits stale
  // entries.
  std::shared_ptr<const PositionalMap> pm(const BlockId& id, std::uint64_t version, const Loader& load);
  std::shared_ptr<const std::vector<VerticalIndex>> vi(const BlockId& id, std::uint64_t version,
                                                       const Loader& load);

  std::uint64_t decodes() const { return decodes_.load(); }
  std::uint64_t failures() const { return failures_.load(); }
  void clear();

 private:
  struct Entry {
    std::once_flag once;
    std::shared_ptr<const void> value;
  };
  std::shared_ptr<Entry> entry(const BlockId& id, std::uint64_t version);

  std::mutex mu_;
  std::map<std::pair<BlockId, std::uint64_t>, std::shared_ptr<Entry>> entries_;
  std::atomic<std::uint64_t> decodes_{0};
  std::atomic<std::uint64_t> failures_{0};
};

}  // namespace rawdb
