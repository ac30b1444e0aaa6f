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

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "rawdb/cluster.h"
#include "rawdb/error.h"

namespace rawdb {

namespace fs = std::filesystem;

std::uint64_t monotonic_ms() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::steady_clock::now().time_since_epoch())
                                        .count());
}

std::uint64_t wall_ms() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
}

std::string_view node_state_name(NodeState state) {
  switch (state) {
    case NodeState::kLive: return "live";
    case NodeState::kSuspect: return "suspect";
    case NodeState::kDead: return "dead";
  }
  return "dead";
}

Catalog::Catalog(fs::path root, Clock clock, std::uint64_t heartbeat_ms)
    : root_(std::move(root)), clock_(std::move(clock)), heartbeat_ms_(heartbeat_ms) {}

fs::path Catalog::manifest_path(std::string_view table) const {
  return root_ / "_catalog" / (std::string(table) + ".manifest");
}

std::size_t Catalog::load() {
  if (root_.empty() || !fs::exists(root_ / "_catalog")) return 0;
  std::unique_lock lock(mu_);
  std::size_t loaded = 0;
  for (const auto& entry : fs::directory_iterator(root_ / "_catalog")) {
    if (entry.path().extension() != ".manifest") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      auto table = std::make_shared<TableDescriptor>(decode_manifest(buf.str()));
      table->validate();
      tables_[table->name] = std::move(table);
      ++loaded;
    } catch (const Error& e) {
      spdlog::warn("skipping manifest {}: {}", entry.path().string(), e.what());
    }
  }
  return loaded;
}

bool Catalog::has_table(std::string_view name) const {
  std::shared_lock lock(mu_);
  return tables_.find(name) != tables_.end();
}

void Catalog::register_table(const TableDescriptor& table) {
  table.validate();
  std::unique_lock lock(mu_);
  if (tables_.find(table.name) != tables_.end()) {
    throw Error(ErrorCode::kAlreadyExists, "table '" + table.name + "' already exists");
  }
  if (!root_.empty()) {
    const fs::path path = manifest_path(table.name);
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      const std::string bytes = encode_manifest(table);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
  }
  tables_[table.name] = std::make_shared<const TableDescriptor>(table);
}

std::shared_ptr<const TableDescriptor> Catalog::table(std::string_view name) const {
  std::shared_lock lock(mu_);
  auto it = tables_.find(name);
  return it == tables_.end() ? nullptr : it->second;
}

std::shared_ptr<const TableDescriptor> Catalog::require_table(std::string_view name) const {
  auto t = table(name);
  if (!t) throw Error(ErrorCode::kNotFound, "unknown table '" + std::string(name) + "'");
  return t;
}

std::vector<std::shared_ptr<const TableDescriptor>> Catalog::tables() const {
  std::shared_lock lock(mu_);
  std::vector<std::shared_ptr<const TableDescriptor>> out;
  for (const auto& [_, t] : tables_) out.push_back(t);
  return out;
}

bool Catalog::drop_table(std::string_view name) {
  std::unique_lock lock(mu_);
  auto it = tables_.find(name);
  if (it == tables_.end()) return false;
  tables_.erase(it);
  if (!root_.empty()) {
    std::error_code ec;
    fs::remove(manifest_path(name), ec);
  }
  return true;
}

bool Catalog::register_node(NodeId id, std::string address, std::uint32_t executors,
                            std::optional<std::uint64_t> capacity) {
  std::unique_lock lock(mu_);
  auto [it, inserted] = nodes_.try_emplace(id);
  auto& e = it->second;
  e.info.id = id;
  e.info.address = std::move(address);
  e.info.executors = std::max<std::uint32_t>(1, executors);
  e.info.capacity_bytes = capacity;
  e.info.last_heartbeat_ms = clock_();
  e.forced_dead = false;
  for (auto x = excluded_.begin(); x != excluded_.end();) {
    x = x->second == id ? excluded_.erase(x) : std::next(x);
  }
  return !inserted;
}

void Catalog::heartbeat(NodeId id, std::uint64_t used_bytes) {
  std::unique_lock lock(mu_);
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorCode::kNotFound, "unknown node " + std::to_string(id));
  if (it->second.forced_dead) return;
  it->second.info.last_heartbeat_ms = clock_();
  it->second.info.used_bytes = used_bytes;
}

void Catalog::mark_dead(NodeId id) {
  std::unique_lock lock(mu_);
  auto it = nodes_.find(id);
  if (it != nodes_.end()) it->second.forced_dead = true;
}

NodeState Catalog::state_locked(const NodeEntry& e) const {
  if (e.forced_dead) return NodeState::kDead;
  const std::uint64_t now = clock_();
  const std::uint64_t gap = now > e.info.last_heartbeat_ms ? now - e.info.last_heartbeat_ms : 0;
  if (gap > 3 * heartbeat_ms_) return NodeState::kDead;
  if (gap > heartbeat_ms_) return NodeState::kSuspect;
  return NodeState::kLive;
}

NodeState Catalog::state(NodeId id) const {
  std::shared_lock lock(mu_);
  auto it = nodes_.find(id);
  return it == nodes_.end() ? NodeState::kDead : state_locked(it->second);
}

std::optional<NodeInfo> Catalog::node(NodeId id) const {
  std::shared_lock lock(mu_);
  auto it = nodes_.find(id);
  if (it == nodes_.end()) return std::nullopt;
  NodeInfo info = it->second.info;
  info.state = state_locked(it->second);
  return info;
}

std::vector<NodeInfo> Catalog::nodes() const {
  std::shared_lock lock(mu_);
  std::vector<NodeInfo> out;
  for (const auto& [_, e] : nodes_) {
    out.push_back(e.info);
    out.back().state = state_locked(e);
  }
  return out;
}

std::vector<NodeId> Catalog::live_nodes() const {
  std::shared_lock lock(mu_);
  std::vector<NodeId> out;
  for (const auto& [id, e] : nodes_) {
    if (state_locked(e) == NodeState::kLive) out.push_back(id);
  }
  return out;
}

void Catalog::exclude_replica(const BlockId& data_block, NodeId node) {
  std::unique_lock lock(mu_);
  excluded_.emplace(data_block, node);
}

std::vector<BlockLocation> Catalog::lookup_locations(std::string_view table) const {
  auto t = require_table(table);
  std::shared_lock lock(mu_);
  std::vector<BlockLocation> out;
  out.reserve(t->data_blocks.size());
  for (std::size_t i = 0; i < t->data_blocks.size(); ++i) {
    BlockLocation loc;
    loc.ordinal = static_cast<std::uint32_t>(i);
    loc.data = t->data_blocks[i];
    if (const auto* pm = t->pm_for(i)) loc.pm = pm->id;
    if (const auto* vi = t->vi_for(i)) loc.vi = vi->id;
    std::vector<Replica> ordered = loc.data.replicas;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Replica& a, const Replica& b) { return a.tier < b.tier; });
    std::vector<Replica> suspect;
    for (const auto& r : ordered) {
      if (excluded_.count({loc.data.id, r.node}) != 0) continue;
      auto it = nodes_.find(r.node);
      if (it == nodes_.end()) continue;
      switch (state_locked(it->second)) {
        case NodeState::kLive: loc.candidates.push_back(r); break;
        case NodeState::kSuspect: suspect.push_back(r); break;
        case NodeState::kDead: break;
      }
    }
    loc.candidates.insert(loc.candidates.end(), suspect.begin(), suspect.end());
    loc.unavailable = loc.candidates.empty();
    out.push_back(std::move(loc));
  }
  return out;
}

}  // namespace rawdb
