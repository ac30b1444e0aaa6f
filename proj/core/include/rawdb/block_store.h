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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rawdb {

using NodeId = std::uint32_t;

enum class BlockKind : std::uint8_t { kData = 0, kPm = 1, kVi = 2, kStats = 3 };

std::string_view block_kind_name(BlockKind kind);
BlockKind parse_block_kind(std::string_view name);

struct BlockId {
  std::string table;
  BlockKind kind = BlockKind::kData;
  std::uint32_t ordinal = 0;

  auto operator<=>(const BlockId&) const = default;

  // "<kind>.<ordinal>.blk"
  std::string file_name() const;
  // "<table>/<kind>.<ordinal>", for diagnostics.
  std::string to_string() const;
  // The metadata block of `kind` describing this block's data ordinal.
  BlockId sibling(BlockKind other) const { return {table, other, ordinal}; }
};

enum class StorageTier : std::uint8_t { kMemory = 0, kDisk = 1 };

std::string_view storage_tier_name(StorageTier tier);

struct Replica {
  NodeId node = 0;
  StorageTier tier = StorageTier::kDisk;

  bool operator==(const Replica&) const = default;
};

struct BlockMeta {
  BlockId id;
  std::uint64_t length = 0;
  std::uint64_t record_count = 0;
  std::vector<Replica> replicas;
  std::uint64_t checksum = 0;
  bool under_replicated = false;

  bool operator==(const BlockMeta&) const = default;

  bool has_replica_on(NodeId node) const;
  std::vector<NodeId> replica_nodes() const;
};

// Per-node n-way replication: every block whose primary is node i lives on
// the same follower set, so a data block and its metadata blocks always share
// nodes.
class ReplicationPolicy {
 public:
  ReplicationPolicy(std::uint32_t factor, std::uint32_t cluster_size);

  std::uint32_t factor() const { return factor_; }
  std::uint32_t cluster_size() const { return cluster_size_; }

  // The fixed n-1 followers of `node`: (node+1, ..., node+n-1) mod N.
  std::vector<NodeId> followers(NodeId node) const;

 private:
  std::uint32_t factor_;
  std::uint32_t cluster_size_;
};

// Fills `block.replicas` with [primary] ++ followers(primary), first replica in
// the memory tier and the rest on disk. Dead followers are skipped by walking
// further along the ring; if fewer than n live nodes remain the block is
// placed on all of them and flagged under-replicated.
BlockMeta place_replicas(BlockMeta block, const ReplicationPolicy& policy, NodeId primary,
                         std::span<const NodeId> live_nodes);

// Gives a metadata block the exact replica list of its data block.
BlockMeta colocate_with(BlockMeta metadata_block, const BlockMeta& data_block);

// Record-aligned split of a newline-terminated stream into [begin, end)
// ranges of at most `target_block_size` bytes. Throws on records longer than
// the target, on CRLF terminators, and on a missing final terminator.
std::vector<std::pair<std::size_t, std::size_t>> split_records(std::string_view stream,
                                                                std::uint64_t target_block_size);

struct ByteRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

struct NodeStoreOptions {
  // Bytes; unset means unbounded.
  std::optional<std::uint64_t> capacity;
  // Also write memory-tier replicas to `<node>/mem/` so other processes on
  // the host can load them (the ramfs mount point analog).
  bool persist_memory_tier = true;
};

// The blocks held by one node. Memory-tier replicas are kept in an in-process
// byte cache; disk-tier replicas are read from files on every access.
class NodeStore {
 public:
  NodeStore(NodeId id, std::filesystem::path root, NodeStoreOptions options = {});

  NodeId id() const { return id_; }
  const std::filesystem::path& root() const { return root_; }

  void put(const BlockId& id, StorageTier tier, std::string_view bytes);

  // Full read with checksum validation. Throws kNotHere if this node does not
  // hold a replica and kCorruption on checksum or length mismatch.
  std::shared_ptr<const std::string> get(const BlockMeta& meta);
  std::string read(const BlockMeta& meta, std::optional<ByteRange> range = std::nullopt);

  bool holds(const BlockId& id) const;
  void remove(const BlockId& id);
  void remove_table(std::string_view table);
  void drop_memory_cache();
  std::uint64_t used_bytes() const;

  std::filesystem::path path_for(const BlockId& id, StorageTier tier) const;

 private:
  std::optional<StorageTier> tier_of(const BlockMeta& meta) const;
  std::string load_file(const std::filesystem::path& path, const BlockMeta& meta) const;

  NodeId id_;
  std::filesystem::path root_;
  NodeStoreOptions options_;
  mutable std::shared_mutex mu_;
  std::map<BlockId, std::shared_ptr<const std::string>> memory_;
  std::map<BlockId, std::pair<StorageTier, std::uint64_t>> held_;
  std::uint64_t used_ = 0;
};

// Single-host view over all nodes' stores plus the registry of stored
// blocks, keyed by BlockId.
class BlockStore {
 public:
  BlockStore(std::filesystem::path root, std::uint32_t node_count, NodeStoreOptions options = {});

  std::uint32_t node_count() const { return static_cast<std::uint32_t>(nodes_.size()); }
  NodeStore& node(NodeId id);
  const std::filesystem::path& root() const { return root_; }

  // Writes `bytes` to every replica in `meta.replicas` and registers the
  // block. Any replica write failure removes the replicas already written.
  void store(const BlockMeta& meta, std::string_view bytes);

  // Splits and stores a stream; data streams are split on record boundaries,
  // other kinds in fixed-size chunks. Ordinal d is placed with primary
  // live_nodes[d % |live_nodes|]. Either every block is stored or none is.
  std::vector<BlockMeta> split_and_store(std::string_view table, BlockKind kind,
                                         std::string_view stream, std::uint64_t target_block_size,
                                         const ReplicationPolicy& policy,
                                         std::span<const NodeId> live_nodes);

  std::string read_block(const BlockId& id, NodeId node,
                         std::optional<ByteRange> range = std::nullopt);

  void register_block(const BlockMeta& meta);
  std::optional<BlockMeta> lookup(const BlockId& id) const;

  // Deletes a block from all its replicas and the registry.
  void remove(const BlockMeta& meta);
  // Deletes a data block together with its pm/vi/stats siblings.
  void remove_data_block(const BlockId& data_id);

 private:
  std::filesystem::path root_;
  std::vector<std::unique_ptr<NodeStore>> nodes_;
  mutable std::shared_mutex mu_;
  std::map<BlockId, BlockMeta> registry_;
};

std::uint64_t block_checksum(std::string_view bytes);

}  // namespace rawdb
