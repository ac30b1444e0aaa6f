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
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rawdb/block_store.h"
#include "rawdb/positional_map.h"
#include "rawdb/schema.h"
#include "rawdb/statistics.h"
#include "rawdb/table.h"
#include "rawdb/vertical_index.h"

namespace rawdb {

inline constexpr std::uint64_t kDefaultBlockSize = 8ULL << 20;
inline constexpr char kSeparator = ',';
inline constexpr char kTerminator = '\n';

struct PmConfig {
  enum class Mode { kRate, kExplicit };
  Mode mode = Mode::kRate;
  // Sampling rate 1/k; k == 0 keeps row lengths only.
  std::uint32_t rate_k = 10;
  std::vector<std::uint32_t> attrs;

  static PmConfig rate(std::uint32_t k) { return {Mode::kRate, k, {}}; }
  static PmConfig explicit_attrs(std::vector<std::uint32_t> attrs) {
    return {Mode::kExplicit, 0, std::move(attrs)};
  }

  // Rate 1/k samples {0, k, 2k, ...}; explicit sets are sorted and deduped.
  std::vector<std::uint32_t> sampled_attrs(std::uint32_t arity) const;
};

// Parses "1/10", "0.1", "0" or "none" (returns nullopt for none).
std::optional<PmConfig> parse_pm_rate(std::string_view text);

struct StatsConfig {
  std::vector<std::uint32_t> attrs;
  std::uint8_t precision = HllSketch::kDefaultPrecision;
};

struct DecoratorConfig {
  std::optional<PmConfig> pm;
  std::vector<std::uint32_t> vi_attrs;
  std::optional<StatsConfig> stats;
  std::uint64_t target_block_size = kDefaultBlockSize;

  // Key-value text, one `key = value` per line, '#' comments. Keys: pm.rate,
  // pm.attrs, vi.attrs, stats.attrs, stats.precision, block.size. Attribute
  // lists take indices or schema names; sizes accept K/M/G suffixes.
  static DecoratorConfig parse(std::string_view text, const Schema& schema);
  static DecoratorConfig load(const std::filesystem::path& path, const Schema& schema);

  // Throws kInvalidArgument for attributes outside the schema, non-numeric
  // vi keys, or bad sizes.
  void validate(const Schema& schema) const;
};

std::vector<std::uint32_t> parse_attr_list(std::string_view text, const Schema& schema);
std::uint64_t parse_byte_size(std::string_view text);

// Where sealed blocks go and how they are placed.
struct WriteTarget {
  BlockStore* store = nullptr;
  std::uint32_t replication = 1;
  std::vector<NodeId> live_nodes;
  TableRegistry* registry = nullptr;
};

struct WriterCounters {
  std::uint64_t tuples = 0;
  std::uint64_t blocks = 0;
  std::uint64_t bytes = 0;
  std::uint64_t nan_keys = 0;
};

// One tuple as it travels through the decorator chain.
struct EncodedTuple {
  std::span<const std::string_view> attrs;
  // Serialized record without its terminator.
  std::string_view row;
  // Row-relative offset of the first byte of every attribute.
  std::span<const std::uint32_t> attr_offsets;
  // Block-relative offset of the row's first byte.
  std::uint64_t row_start = 0;
  // 1-based position in the write stream.
  std::uint64_t row_number = 0;
};

// A stage of the metadata pipeline. Each decorator sees every tuple exactly
// once, in write order, and emits its artifact when a block is sealed.
class Decorator {
 public:
  virtual ~Decorator() = default;
  virtual BlockKind kind() const = 0;
  virtual void process(const EncodedTuple& tuple) = 0;
  // Encoded artifact for the block just finished; resets per-block state.
  virtual std::string seal() = 0;
};

class DecoratedWriter {
 public:
  DecoratedWriter(WriteTarget target, std::string table, Schema schema, DecoratorConfig config);
  ~DecoratedWriter();
  DecoratedWriter(const DecoratedWriter&) = delete;
  DecoratedWriter& operator=(const DecoratedWriter&) = delete;

  // Serializes the tuple as separator-joined attributes plus '\n'. Seals the
  // current block first if the row would not fit. A rejected tuple aborts the
  // whole write and removes every block already stored.
  void write_tuple(std::span<const std::string_view> attrs);

  // Seals the final block, merges per-block statistics, registers the table.
  // A second call throws.
  TableDescriptor close();

  const WriterCounters& counters() const { return counters_; }
  const DecoratorConfig& config() const { return config_; }

 private:
  void seal_block();
  void abort();
  [[noreturn]] void reject(const std::string& message);

  WriteTarget target_;
  std::string table_;
  Schema schema_;
  DecoratorConfig config_;
  std::vector<std::unique_ptr<Decorator>> chain_;
  std::string block_;
  std::uint64_t block_records_ = 0;
  std::vector<std::uint32_t> offsets_scratch_;
  TableDescriptor descriptor_;
  std::vector<TableStatistics> block_stats_;
  WriterCounters counters_;
  bool closed_ = false;
  bool failed_ = false;
};

std::unique_ptr<DecoratedWriter> open_decorated_writer(WriteTarget target, std::string table,
                                                       Schema schema, DecoratorConfig config);

// Streams an existing CSV file through a decorated writer. The stored data
// blocks are byte-identical to the file.
TableDescriptor decorate_existing(const std::filesystem::path& csv_path, std::string table,
                                  const Schema& schema, const DecoratorConfig& config,
                                  WriteTarget target);

}  // namespace rawdb
