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

#include "rawdb/block_store.h"

#include <sys/mman.h>

#include <algorithm>
#include <fstream>
#include <mutex>

#include <fmt/format.h>

#include "rawdb/error.h"
#include "rawdb/hash.h"

namespace fs = std::filesystem;

namespace rawdb {

namespace {

// Buffer for a memory-tier replica. Large buffers ask for transparent huge
// pages before first touch; scans stride through them row by row.
std::string block_buffer(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  constexpr std::uintptr_t kHuge = 2u << 20;
  if (bytes.size() >= 2 * kHuge) {
    const auto begin = (reinterpret_cast<std::uintptr_t>(out.data()) + kHuge - 1) & ~(kHuge - 1);
    const auto end = (reinterpret_cast<std::uintptr_t>(out.data()) + bytes.size()) & ~(kHuge - 1);
    if (end > begin) ::madvise(reinterpret_cast<void*>(begin), end - begin, MADV_HUGEPAGE);
  }
  out.assign(bytes);
  return out;
}

}  // namespace

std::string_view block_kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::kData:
      return "data";
    case BlockKind::kPm:
      return "pm";
    case BlockKind::kVi:
      return "vi";
    case BlockKind::kStats:
      return "stats";
  }
  return "data";
}

BlockKind parse_block_kind(std::string_view name) {
  if (name == "data") return BlockKind::kData;
  if (name == "pm") return BlockKind::kPm;
  if (name == "vi") return BlockKind::kVi;
  if (name == "stats") return BlockKind::kStats;
  throw_error(ErrorCode::kInvalidArgument, fmt::format("unknown block kind '{}'", name));
}

std::string_view storage_tier_name(StorageTier tier) {
  return tier == StorageTier::kMemory ? "memory" : "disk";
}

std::string BlockId::file_name() const {
  return fmt::format("{}.{}.blk", block_kind_name(kind), ordinal);
}

std::string BlockId::to_string() const {
  return fmt::format("{}/{}.{}", table, block_kind_name(kind), ordinal);
}

bool BlockMeta::has_replica_on(NodeId node) const {
  return std::any_of(replicas.begin(), replicas.end(),
                     [node](const Replica& r) { return r.node == node; });
}

std::vector<NodeId> BlockMeta::replica_nodes() const {
  std::vector<NodeId> out;
  out.reserve(replicas.size());
  for (const auto& r : replicas) out.push_back(r.node);
  return out;
}

std::uint64_t block_checksum(std::string_view bytes) { return xxh64(bytes, 0); }

ReplicationPolicy::ReplicationPolicy(std::uint32_t factor, std::uint32_t cluster_size)
    : factor_(factor), cluster_size_(cluster_size) {
  if (factor == 0) throw_error(ErrorCode::kInvalidArgument, "replication factor must be >= 1");
  if (cluster_size == 0) throw_error(ErrorCode::kInvalidArgument, "cluster size must be >= 1");
}

std::vector<NodeId> ReplicationPolicy::followers(NodeId node) const {
  std::vector<NodeId> out;
  const std::uint32_t n = std::min(factor_, cluster_size_);
  for (std::uint32_t k = 1; k < n; ++k) out.push_back((node + k) % cluster_size_);
  return out;
}

BlockMeta place_replicas(BlockMeta block, const ReplicationPolicy& policy, NodeId primary,
                         std::span<const NodeId> live_nodes) {
  auto is_live = [&](NodeId n) {
    return std::find(live_nodes.begin(), live_nodes.end(), n) != live_nodes.end();
  };
  if (!is_live(primary)) {
    throw_error(ErrorCode::kUnavailable, fmt::format("primary node {} is not live", primary));
  }
  block.replicas.clear();
  block.replicas.push_back({primary, StorageTier::kMemory});
  const std::uint32_t want = policy.factor();
  // Walk the ring from primary+1; with every node live this yields exactly
  // followers(primary).
  for (std::uint32_t k = 1; k < policy.cluster_size() && block.replicas.size() < want; ++k) {
    const NodeId candidate = (primary + k) % policy.cluster_size();
    if (is_live(candidate)) block.replicas.push_back({candidate, StorageTier::kDisk});
  }
  block.under_replicated = block.replicas.size() < want;
  return block;
}

BlockMeta colocate_with(BlockMeta metadata_block, const BlockMeta& data_block) {
  metadata_block.replicas = data_block.replicas;
  metadata_block.under_replicated = data_block.under_replicated;
  return metadata_block;
}

std::vector<std::pair<std::size_t, std::size_t>> split_records(std::string_view stream,
                                                                std::uint64_t target_block_size) {
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  if (stream.empty()) return blocks;
  if (target_block_size == 0) {
    throw_error(ErrorCode::kInvalidArgument, "target block size must be positive");
  }
  if (stream.back() != '\n') {
    throw_error(ErrorCode::kInvalidArgument, "data stream does not end with a record terminator");
  }
  std::size_t block_begin = 0;
  std::size_t pos = 0;
  std::uint64_t record_no = 0;
  while (pos < stream.size()) {
    const std::size_t nl = stream.find('\n', pos);
    const std::size_t rec_end = nl + 1;
    ++record_no;
    if (nl > pos && stream[nl - 1] == '\r') {
      throw_error(ErrorCode::kInvalidArgument,
                  fmt::format("record {} uses a CRLF terminator; only \\n is accepted", record_no));
    }
    if (rec_end - pos > target_block_size) {
      throw_error(ErrorCode::kInvalidArgument,
                  fmt::format("record {} is {} bytes, longer than the target block size {}",
                              record_no, rec_end - pos, target_block_size));
    }
    if (rec_end - block_begin > target_block_size) {
      blocks.emplace_back(block_begin, pos);
      block_begin = pos;
    }
    pos = rec_end;
  }
  blocks.emplace_back(block_begin, stream.size());
  return blocks;
}

// NodeStore

NodeStore::NodeStore(NodeId id, fs::path root, NodeStoreOptions options)
    : id_(id), root_(std::move(root)), options_(options) {
  fs::create_directories(root_);
  for (const StorageTier tier : {StorageTier::kMemory, StorageTier::kDisk}) {
    const fs::path tier_root = root_ / (tier == StorageTier::kMemory ? "mem" : "disk");
    if (!fs::exists(tier_root)) continue;
    for (const auto& table_dir : fs::directory_iterator(tier_root)) {
      if (!table_dir.is_directory()) continue;
      for (const auto& f : fs::directory_iterator(table_dir.path())) {
        // <kind>.<ordinal>.blk
        const std::string name = f.path().filename().string();
        const auto dot1 = name.find('.');
        const auto dot2 = name.rfind('.');
        if (dot1 == std::string::npos || dot2 == dot1 || name.substr(dot2) != ".blk") continue;
        try {
          BlockId bid{table_dir.path().filename().string(), parse_block_kind(name.substr(0, dot1)),
                      static_cast<std::uint32_t>(std::stoul(name.substr(dot1 + 1, dot2 - dot1 - 1)))};
          const auto size = f.file_size();
          held_[bid] = {tier, size};
          used_ += size;
        } catch (const std::exception&) {
          continue;
        }
      }
    }
  }
}

fs::path NodeStore::path_for(const BlockId& id, StorageTier tier) const {
  return root_ / (tier == StorageTier::kMemory ? "mem" : "disk") / id.table / id.file_name();
}

void NodeStore::put(const BlockId& id, StorageTier tier, std::string_view bytes) {
  {
    std::unique_lock lock(mu_);
    if (options_.capacity && used_ + bytes.size() > *options_.capacity) {
      throw_error(ErrorCode::kStorageFull,
                  fmt::format("node {} is full ({} of {} bytes used, {} requested)", id_, used_,
                              *options_.capacity, bytes.size()));
    }
    used_ += bytes.size();
    if (auto it = held_.find(id); it != held_.end()) used_ -= it->second.second;
    held_[id] = {tier, bytes.size()};
  }
  if (tier == StorageTier::kDisk || options_.persist_memory_tier) {
    const fs::path path = path_for(id, tier);
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      remove(id);
      throw_error(ErrorCode::kIo, fmt::format("failed writing {}", path.string()));
    }
  }
  if (tier == StorageTier::kMemory) {
    auto data = std::make_shared<const std::string>(block_buffer(bytes));
    std::unique_lock lock(mu_);
    memory_[id] = std::move(data);
  }
}

std::optional<StorageTier> NodeStore::tier_of(const BlockMeta& meta) const {
  for (const auto& r : meta.replicas) {
    if (r.node == id_) return r.tier;
  }
  return std::nullopt;
}

std::string NodeStore::load_file(const fs::path& path, const BlockMeta& meta) const {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw_error(ErrorCode::kNotHere,
                fmt::format("node {} has no replica file for {}", id_, meta.id.to_string()));
  }
  std::string bytes(meta.length, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != meta.length || in.peek() != EOF) {
    throw_error(ErrorCode::kCorruption,
                fmt::format("replica of {} on node {} has the wrong length", meta.id.to_string(), id_));
  }
  return bytes;
}

std::shared_ptr<const std::string> NodeStore::get(const BlockMeta& meta) {
  const auto tier = tier_of(meta);
  if (!tier) {
    throw_error(ErrorCode::kNotHere,
                fmt::format("node {} holds no replica of {}", id_, meta.id.to_string()));
  }
  if (*tier == StorageTier::kMemory) {
    std::shared_lock lock(mu_);
    if (auto it = memory_.find(meta.id); it != memory_.end()) return it->second;
  }
  auto bytes = load_file(path_for(meta.id, *tier), meta);
  if (block_checksum(bytes) != meta.checksum) {
    throw_error(ErrorCode::kCorruption,
                fmt::format("checksum mismatch for {} on node {}", meta.id.to_string(), id_));
  }
  auto shared = std::make_shared<const std::string>(*tier == StorageTier::kMemory ? block_buffer(bytes)
                                                                                 : std::move(bytes));
  if (*tier == StorageTier::kMemory) {
    std::unique_lock lock(mu_);
    auto [it, inserted] = memory_.emplace(meta.id, shared);
    return it->second;
  }
  return shared;
}

std::string NodeStore::read(const BlockMeta& meta, std::optional<ByteRange> range) {
  if (!range) return *get(meta);
  if (range->begin > range->end || range->end > meta.length) {
    throw_error(ErrorCode::kInvalidArgument,
                fmt::format("range [{}, {}) outside block {} of length {}", range->begin, range->end,
                            meta.id.to_string(), meta.length));
  }
  const auto tier = tier_of(meta);
  if (!tier) {
    throw_error(ErrorCode::kNotHere,
                fmt::format("node {} holds no replica of {}", id_, meta.id.to_string()));
  }
  if (*tier == StorageTier::kMemory) {
    std::shared_ptr<const std::string> cached;
    {
      std::shared_lock lock(mu_);
      if (auto it = memory_.find(meta.id); it != memory_.end()) cached = it->second;
    }
    if (!cached) cached = get(meta);
    return cached->substr(range->begin, range->end - range->begin);
  }
  std::ifstream in(path_for(meta.id, *tier), std::ios::binary);
  if (!in) {
    throw_error(ErrorCode::kNotHere,
                fmt::format("node {} has no replica file for {}", id_, meta.id.to_string()));
  }
  std::string out(range->end - range->begin, '\0');
  in.seekg(static_cast<std::streamoff>(range->begin));
  in.read(out.data(), static_cast<std::streamsize>(out.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != out.size()) {
    throw_error(ErrorCode::kCorruption,
                fmt::format("short range read of {} on node {}", meta.id.to_string(), id_));
  }
  return out;
}

bool NodeStore::holds(const BlockId& id) const {
  std::shared_lock lock(mu_);
  return held_.contains(id);
}

void NodeStore::remove(const BlockId& id) {
  std::optional<StorageTier> tier;
  {
    std::unique_lock lock(mu_);
    memory_.erase(id);
    if (auto it = held_.find(id); it != held_.end()) {
      tier = it->second.first;
      used_ -= it->second.second;
      held_.erase(it);
    }
  }
  std::error_code ec;
  fs::remove(path_for(id, StorageTier::kMemory), ec);
  fs::remove(path_for(id, StorageTier::kDisk), ec);
}

void NodeStore::remove_table(std::string_view table) {
  std::vector<BlockId> ids;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, _] : held_) {
      if (id.table == table) ids.push_back(id);
    }
  }
  for (const auto& id : ids) remove(id);
  std::error_code ec;
  fs::remove_all(root_ / "mem" / std::string(table), ec);
  fs::remove_all(root_ / "disk" / std::string(table), ec);
}

void NodeStore::drop_memory_cache() {
  std::unique_lock lock(mu_);
  if (options_.persist_memory_tier) memory_.clear();
}

std::uint64_t NodeStore::used_bytes() const {
  std::shared_lock lock(mu_);
  return used_;
}

// BlockStore

BlockStore::BlockStore(fs::path root, std::uint32_t node_count, NodeStoreOptions options)
    : root_(std::move(root)) {
  if (node_count == 0) throw_error(ErrorCode::kInvalidArgument, "block store needs at least one node");
  for (NodeId i = 0; i < node_count; ++i) {
    nodes_.push_back(std::make_unique<NodeStore>(i, root_ / fmt::format("node-{}", i), options));
  }
}

NodeStore& BlockStore::node(NodeId id) {
  if (id >= nodes_.size()) throw_error(ErrorCode::kNotFound, fmt::format("no node {}", id));
  return *nodes_[id];
}

void BlockStore::store(const BlockMeta& meta, std::string_view bytes) {
  std::vector<NodeId> written;
  try {
    for (const auto& r : meta.replicas) {
      node(r.node).put(meta.id, r.tier, bytes);
      written.push_back(r.node);
    }
  } catch (...) {
    for (NodeId n : written) node(n).remove(meta.id);
    throw;
  }
  register_block(meta);
}

std::vector<BlockMeta> BlockStore::split_and_store(std::string_view table, BlockKind kind,
                                                   std::string_view stream,
                                                   std::uint64_t target_block_size,
                                                   const ReplicationPolicy& policy,
                                                   std::span<const NodeId> live_nodes) {
  if (live_nodes.empty()) throw_error(ErrorCode::kUnavailable, "no live nodes");
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  if (kind == BlockKind::kData) {
    ranges = split_records(stream, target_block_size);
  } else {
    for (std::size_t b = 0; b < stream.size(); b += target_block_size) {
      ranges.emplace_back(b, std::min<std::size_t>(stream.size(), b + target_block_size));
    }
  }
  std::vector<BlockMeta> out;
  try {
    for (std::size_t d = 0; d < ranges.size(); ++d) {
      const auto bytes = stream.substr(ranges[d].first, ranges[d].second - ranges[d].first);
      BlockMeta meta;
      meta.id = {std::string(table), kind, static_cast<std::uint32_t>(d)};
      meta.length = bytes.size();
      meta.record_count =
          kind == BlockKind::kData ? static_cast<std::uint64_t>(std::count(bytes.begin(), bytes.end(), '\n')) : 0;
      meta.checksum = block_checksum(bytes);
      meta = place_replicas(std::move(meta), policy, live_nodes[d % live_nodes.size()], live_nodes);
      store(meta, bytes);
      out.push_back(std::move(meta));
    }
  } catch (...) {
    for (const auto& m : out) remove(m);
    throw;
  }
  return out;
}

std::string BlockStore::read_block(const BlockId& id, NodeId node_id, std::optional<ByteRange> range) {
  const auto meta = lookup(id);
  if (!meta) throw_error(ErrorCode::kNotFound, fmt::format("unknown block {}", id.to_string()));
  if (!meta->has_replica_on(node_id)) {
    throw_error(ErrorCode::kNotHere,
                fmt::format("node {} holds no replica of {}", node_id, id.to_string()));
  }
  return node(node_id).read(*meta, range);
}

void BlockStore::register_block(const BlockMeta& meta) {
  std::unique_lock lock(mu_);
  registry_[meta.id] = meta;
}

std::optional<BlockMeta> BlockStore::lookup(const BlockId& id) const {
  std::shared_lock lock(mu_);
  if (auto it = registry_.find(id); it != registry_.end()) return it->second;
  return std::nullopt;
}

void BlockStore::remove(const BlockMeta& meta) {
  {
    std::unique_lock lock(mu_);
    registry_.erase(meta.id);
  }
  for (const auto& r : meta.replicas) {
    if (r.node < nodes_.size()) nodes_[r.node]->remove(meta.id);
  }
}

void BlockStore::remove_data_block(const BlockId& data_id) {
  std::vector<BlockMeta> doomed;
  {
    std::unique_lock lock(mu_);
    for (const BlockKind k : {BlockKind::kData, BlockKind::kPm, BlockKind::kVi, BlockKind::kStats}) {
      if (auto it = registry_.find(data_id.sibling(k)); it != registry_.end()) {
        doomed.push_back(it->second);
        registry_.erase(it);
      }
    }
  }
  for (const auto& meta : doomed) {
    for (const auto& r : meta.replicas) {
      if (r.node < nodes_.size()) nodes_[r.node]->remove(meta.id);
    }
  }
}

}  // namespace rawdb
