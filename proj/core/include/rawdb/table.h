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
#include <vector>

#include "rawdb/block_store.h"
#include "rawdb/schema.h"
#include "rawdb/statistics.h"

namespace rawdb {

// Catalog entry for one table: schema, the ordered data blocks, and the
// co-located metadata blocks. Each metadata list is either empty or has one
// block per data block, with matching ordinals and replica lists.
struct TableDescriptor {
  std::string name;
  Schema schema;
  std::vector<BlockMeta> data_blocks;
  std::vector<BlockMeta> pm_blocks;
  std::vector<BlockMeta> vi_blocks;
  std::vector<BlockMeta> stats_blocks;
  // Attributes carrying a vertical index.
  std::vector<std::uint32_t> key_attrs;
  // Attributes sampled by the positional map (informational; the pm blocks
  // are authoritative).
  std::vector<std::uint32_t> pm_sampled;
  std::optional<TableStatistics> stats;
  std::uint64_t created_ms = 0;
  std::uint64_t target_block_size = 0;
  std::uint32_t replication = 1;

  std::uint64_t record_count() const;
  std::uint64_t byte_count() const;
  bool has_pm() const { return !pm_blocks.empty(); }
  bool has_vi_on(std::uint32_t attr) const;

  const BlockMeta* pm_for(std::size_t ordinal) const {
    return ordinal < pm_blocks.size() ? &pm_blocks[ordinal] : nullptr;
  }
  const BlockMeta* vi_for(std::size_t ordinal) const {
    return ordinal < vi_blocks.size() ? &vi_blocks[ordinal] : nullptr;
  }

  // Throws kCorruption describing the first broken invariant.
  void validate() const;

  bool operator==(const TableDescriptor&) const = default;
};

// Binary table manifest, all integers little-endian:
//   "DNTM" u16 version=1, then name, created_ms, block size, replication,
//   schema, key attrs, pm sampled attrs, four block lists, optional DNST stats.
std::string encode_manifest(const TableDescriptor& table);
TableDescriptor decode_manifest(std::string_view bytes);

// Where a finished table gets published.
class TableRegistry {
 public:
  virtual ~TableRegistry() = default;
  virtual bool has_table(std::string_view name) const = 0;
  virtual void register_table(const TableDescriptor& table) = 0;
};

}  // namespace rawdb
