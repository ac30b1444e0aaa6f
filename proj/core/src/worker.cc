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
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "rawdb/cluster.h"
#include "rawdb/error.h"

namespace rawdb {

namespace {

std::uint32_t default_executors(std::uint32_t requested) {
  if (requested > 0) return std::min<std::uint32_t>(requested, 1024);
  const unsigned hw = std::thread::hardware_concurrency();
  return std::max<std::uint32_t>(1, hw > 1 ? hw - 1 : 1);
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

MetadataCache::Loader loader_for(NodeStore& store, const BlockMeta& meta) {
  return [&store, &meta]() -> std::optional<std::string> {
    if (!store.holds(meta.id)) return std::nullopt;
    return *store.get(meta);
  };
}

}  // namespace

Worker::Worker(NodeId id, NodeStore& store, WorkerOptions options)
    : id_(id),
      store_(&store),
      executors_(default_executors(options.executors)),
      slots_(executors_),
      learned_(options.learned_positions_budget) {}

std::unique_ptr<Worker> Worker::open(NodeId id, const std::filesystem::path& root,
                                     WorkerOptions options, NodeStoreOptions store) {
  auto owned = std::make_unique<NodeStore>(id, root / fmt::format("node-{}", id), store);
  auto worker = std::make_unique<Worker>(id, *owned, options);
  worker->owned_store_ = std::move(owned);
  return worker;
}

PartialResult Worker::execute(const FragmentRequest& request) {
  if (killed_) throw Error(ErrorCode::kUnavailable, fmt::format("node {} is down", id_));
  if (const auto delay = delay_ms_.load(); delay > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
  }
  SlotGuard slot(slots_);
  if (killed_) throw Error(ErrorCode::kUnavailable, fmt::format("node {} is down", id_));

  const BlockMeta& data = request.data_block;
  const auto bytes = store_->get(data);

  std::shared_ptr<const PositionalMap> pm;
  if (request.use_pm && request.pm_block) {
    pm = metadata_.pm(request.pm_block->id, request.pm_block->checksum,
                      loader_for(*store_, *request.pm_block));
  }
  std::shared_ptr<const std::vector<VerticalIndex>> vi;
  if (request.scan.access == AccessPath::kIndex && request.vi_block) {
    vi = metadata_.vi(request.vi_block->id, request.vi_block->checksum,
                      loader_for(*store_, *request.vi_block));
  }
  std::shared_ptr<LearnedPositions> learned;
  if (request.learn_positions && learned_.has_room()) {
    learned = learned_.for_block(data.id, data.checksum);
  }

  BlockScanner scanner(request.schema, *bytes, data.record_count, pm.get(), learned.get(),
                       ScanOptions{request.learn_positions});
  PartialResult result = execute_fragment(request, scanner, vi.get());
  ++executed_;
  return result;
}

std::vector<BlockId> Worker::verify(const std::vector<BlockMeta>& blocks) {
  std::vector<BlockId> failed;
  for (const auto& meta : blocks) {
    const auto replica = std::find_if(meta.replicas.begin(), meta.replicas.end(),
                                      [&](const Replica& r) { return r.node == id_; });
    if (replica == meta.replicas.end()) continue;
    std::ifstream in(store_->path_for(meta.id, replica->tier), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    if (!in || bytes.size() != meta.length || block_checksum(bytes) != meta.checksum) {
      failed.push_back(meta.id);
    }
  }
  return failed;
}

void InProcessTransport::add(Worker* worker) {
  std::unique_lock lock(mu_);
  workers_[worker->id()] = worker;
}

Worker* InProcessTransport::find(NodeId node) {
  std::shared_lock lock(mu_);
  auto it = workers_.find(node);
  if (it == workers_.end()) {
    throw Error(ErrorCode::kUnavailable, fmt::format("node {} is not reachable", node));
  }
  return it->second;
}

PartialResult InProcessTransport::execute(NodeId node, const FragmentRequest& request) {
  return find(node)->execute(request);
}

std::vector<BlockId> InProcessTransport::verify(NodeId node, const std::vector<BlockMeta>& blocks) {
  Worker* w = find(node);
  if (w->killed()) throw Error(ErrorCode::kUnavailable, fmt::format("node {} is down", node));
  return w->verify(blocks);
}

void InProcessTransport::kill(NodeId node) { find(node)->kill(); }

}  // namespace rawdb
