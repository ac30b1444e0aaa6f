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
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "rawdb/block_store.h"
#include "rawdb/decorators.h"
#include "rawdb/executor.h"
#include "rawdb/planner.h"
#include "rawdb/report.h"
#include "rawdb/scan.h"
#include "rawdb/table.h"

namespace rawdb {

inline constexpr std::uint64_t kHeartbeatMs = 1000;

using Clock = std::function<std::uint64_t()>;

// Milliseconds on a monotonic clock.
std::uint64_t monotonic_ms();
std::uint64_t wall_ms();

enum class NodeState : std::uint8_t { kLive, kSuspect, kDead };

std::string_view node_state_name(NodeState state);

struct NodeInfo {
  NodeId id = 0;
  std::string address;
  NodeState state = NodeState::kLive;
  std::uint64_t last_heartbeat_ms = 0;
  std::uint64_t used_bytes = 0;
  std::optional<std::uint64_t> capacity_bytes;
  std::uint32_t executors = 1;

  bool operator==(const NodeInfo&) const = default;
};

struct BlockLocation {
  std::uint32_t ordinal = 0;
  BlockMeta data;
  std::optional<BlockId> pm;
  std::optional<BlockId> vi;
  // Live replicas in placement order (memory tier first), then suspect ones.
  // Dead nodes are never listed.
  std::vector<Replica> candidates;
  bool unavailable = false;
};

// Tables and nodes. Tables are immutable snapshots swapped in whole, so a
// reader sees a table completely or not at all. With a root directory,
// manifests persist under <root>/_catalog/.
class Catalog : public TableRegistry {
 public:
  explicit Catalog(std::filesystem::path root = {}, Clock clock = monotonic_ms,
                   std::uint64_t heartbeat_ms = kHeartbeatMs);

  // Loads persisted manifests; returns how many tables were loaded.
  std::size_t load();

  bool has_table(std::string_view name) const override;
  // Throws kAlreadyExists for a duplicate name and kCorruption for a
  // descriptor that violates its invariants.
  void register_table(const TableDescriptor& table) override;
  std::shared_ptr<const TableDescriptor> table(std::string_view name) const;
  // Throws kNotFound.
  std::shared_ptr<const TableDescriptor> require_table(std::string_view name) const;
  std::vector<std::shared_ptr<const TableDescriptor>> tables() const;
  // Returns false when absent.
  bool drop_table(std::string_view name);

  // Returns true when the node was already known (a restart).
  bool register_node(NodeId id, std::string address, std::uint32_t executors = 1,
                     std::optional<std::uint64_t> capacity = std::nullopt);
  // Throws kNotFound for unknown nodes.
  void heartbeat(NodeId id, std::uint64_t used_bytes = 0);
  void mark_dead(NodeId id);
  NodeState state(NodeId id) const;
  std::optional<NodeInfo> node(NodeId id) const;
  std::vector<NodeInfo> nodes() const;
  std::vector<NodeId> live_nodes() const;

  // Removes a replica from candidate lists, e.g. after failed revalidation.
  void exclude_replica(const BlockId& data_block, NodeId node);

  // Throws kNotFound for unknown tables.
  std::vector<BlockLocation> lookup_locations(std::string_view table) const;

  std::uint64_t heartbeat_ms() const { return heartbeat_ms_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  struct NodeEntry {
    NodeInfo info;
    bool forced_dead = false;
  };
  NodeState state_locked(const NodeEntry& e) const;
  std::filesystem::path manifest_path(std::string_view table) const;

  std::filesystem::path root_;
  Clock clock_;
  std::uint64_t heartbeat_ms_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const TableDescriptor>, std::less<>> tables_;
  std::map<NodeId, NodeEntry> nodes_;
  std::set<std::pair<BlockId, NodeId>> excluded_;
};

struct WorkerOptions {
  // Concurrent fragment executors; 0 selects max(1, cores - 1).
  std::uint32_t executors = 0;
  std::uint64_t learned_positions_budget = 1ULL << 30;
};

// Executes fragments over the blocks of one node.
class Worker {
 public:
  Worker(NodeId id, NodeStore& store, WorkerOptions options = {});
  // Standalone worker owning the store at <root>/node-<id>.
  static std::unique_ptr<Worker> open(NodeId id, const std::filesystem::path& root,
                                      WorkerOptions options = {}, NodeStoreOptions store = {});

  NodeId id() const { return id_; }
  std::uint32_t executors() const { return executors_; }

  // Throws kUnavailable while killed; scan and storage errors propagate.
  PartialResult execute(const FragmentRequest& request);

  // Re-reads each block with checksum validation; returns the failures.
  std::vector<BlockId> verify(const std::vector<BlockMeta>& blocks);

  // Fault injection.
  void kill() { killed_ = true; }
  void revive() { killed_ = false; }
  bool killed() const { return killed_; }
  void set_delay_ms(std::uint64_t ms) { delay_ms_ = ms; }

  NodeStore& store() { return *store_; }
  MetadataCache& metadata_cache() { return metadata_; }
  IncrementalPmCache& learned_positions() { return learned_; }
  std::uint64_t fragments_executed() const { return executed_; }

 private:
  std::unique_ptr<NodeStore> owned_store_;
  NodeId id_;
  NodeStore* store_;
  std::uint32_t executors_;
  std::counting_semaphore<1024> slots_;
  MetadataCache metadata_;
  IncrementalPmCache learned_;
  std::atomic<bool> killed_{false};
  std::atomic<std::uint64_t> delay_ms_{0};
  std::atomic<std::uint64_t> executed_{0};
};

// How the coordinator reaches workers. Implementations throw kUnavailable
// when the node cannot be reached.
class WorkerTransport {
 public:
  virtual ~WorkerTransport() = default;
  virtual PartialResult execute(NodeId node, const FragmentRequest& request) = 0;
  virtual std::vector<BlockId> verify(NodeId node, const std::vector<BlockMeta>& blocks) = 0;
  virtual void kill(NodeId node) = 0;
};

class InProcessTransport : public WorkerTransport {
 public:
  void add(Worker* worker);
  PartialResult execute(NodeId node, const FragmentRequest& request) override;
  std::vector<BlockId> verify(NodeId node, const std::vector<BlockMeta>& blocks) override;
  void kill(NodeId node) override;

 private:
  Worker* find(NodeId node);
  std::shared_mutex mu_;
  std::map<NodeId, Worker*> workers_;
};

// JSON over HTTP; worker addresses come from the catalog.
class HttpTransport : public WorkerTransport {
 public:
  HttpTransport(std::shared_ptr<const Catalog> catalog, std::uint64_t request_timeout_ms = 600000);
  PartialResult execute(NodeId node, const FragmentRequest& request) override;
  std::vector<BlockId> verify(NodeId node, const std::vector<BlockMeta>& blocks) override;
  void kill(NodeId node) override;

 private:
  std::string address(NodeId node) const;
  std::shared_ptr<const Catalog> catalog_;
  std::uint64_t timeout_ms_;
};

struct CoordinatorOptions {
  // Redirection timeout: factor x rolling median latency, at least floor.
  double hedge_factor = 2.0;
  std::uint64_t hedge_floor_ms = 250;
  // Used until the first fragment latency is known.
  std::uint64_t initial_timeout_ms = 1000;
  std::size_t latency_window = 64;
  // In-flight fragments per node; 0 uses each node's executor count.
  std::uint32_t node_slots = 0;
  // Replicas sampled for checksum revalidation when a node re-registers.
  std::size_t revalidation_sample = 8;
  bool allow_kill = false;
};

// Parses, plans, dispatches fragments to replica holders and merges.
class Coordinator {
 public:
  Coordinator(std::shared_ptr<Catalog> catalog, std::shared_ptr<WorkerTransport> transport,
              CoordinatorOptions options = {});
  // Waits for attempts still running after their query returned.
  ~Coordinator();
  Coordinator(const Coordinator&) = delete;
  Coordinator& operator=(const Coordinator&) = delete;

  // SELECT or EXPLAIN; SET is applied to `options` only for this call.
  QueryResponse run_query(std::string_view sql, QueryOptions options = {});
  QueryResponse run_statement(const Statement& statement, QueryOptions options = {});

  // Registers (or re-registers) a worker; a restart triggers checksum
  // revalidation of a sample of its replicas. Returns the failed blocks.
  std::vector<BlockId> register_worker(NodeId id, std::string address, std::uint32_t executors,
                                       std::optional<std::uint64_t> capacity = std::nullopt);
  void kill_node(NodeId id);

  Catalog& catalog() { return *catalog_; }
  std::shared_ptr<Catalog> catalog_ptr() { return catalog_; }
  const CoordinatorOptions& options() const { return options_; }

  double current_timeout_ms(const QueryOptions& options) const;

 private:
  struct PhaseResult {
    std::vector<PartialResult> partials;
    std::vector<FragmentReport> reports;
    std::uint32_t retries = 0;
    std::uint32_t hedges = 0;
    std::uint32_t duplicates = 0;
  };
  PhaseResult dispatch(const std::string& phase, const TableDescriptor& table,
                       std::vector<FragmentRequest> fragments, const QueryOptions& options);
  void record_latency(double ms);
  std::uint32_t slots_for(NodeId node) const;
  bool try_acquire_slot(NodeId node);
  void release_slot(NodeId node);

  std::shared_ptr<Catalog> catalog_;
  std::shared_ptr<WorkerTransport> transport_;
  CoordinatorOptions options_;
  std::atomic<std::uint64_t> next_query_{1};
  mutable std::mutex latency_mu_;
  std::deque<double> latencies_;
  std::mutex slots_mu_;
  std::map<NodeId, std::uint32_t> in_flight_;
  std::mutex attempts_mu_;
  std::condition_variable attempts_cv_;
  std::size_t attempts_outstanding_ = 0;
  // Threads running fragment attempts; declared last so it joins first.
  struct AttemptPool;
  std::unique_ptr<AttemptPool> pool_;
};

// HTTP front door of the coordinator. Binds to `port` (0 picks one).
class CoordinatorServer {
 public:
  CoordinatorServer(Coordinator& coordinator, std::string host, int port,
                    std::function<void(NodeId)> on_kill = {});
  ~CoordinatorServer();
  int port() const { return port_; }
  std::string url() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::string host_;
};

class WorkerServer {
 public:
  WorkerServer(Worker& worker, std::string host, int port);
  ~WorkerServer();
  int port() const { return port_; }
  std::string url() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::string host_;
};

// Registers a worker with a remote coordinator and heartbeats every
// interval until stopped or the worker is killed.
class HeartbeatAgent {
 public:
  HeartbeatAgent(std::string coordinator_url, Worker& worker, std::string worker_url,
                 std::uint64_t interval_ms = kHeartbeatMs / 3);
  ~HeartbeatAgent();
  void stop();

 private:
  std::string coordinator_url_;
  Worker& worker_;
  std::string worker_url_;
  std::uint64_t interval_ms_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::thread thread_;
};

// Publishes tables to a remote coordinator via POST /v1/tables.
class HttpTableRegistry : public TableRegistry {
 public:
  explicit HttpTableRegistry(std::string coordinator_url);
  bool has_table(std::string_view name) const override;
  void register_table(const TableDescriptor& table) override;

 private:
  std::string url_;
};

// Client side of the coordinator's HTTP API. Remote errors are rethrown
// with their original code; an unreachable coordinator is kUnavailable.
class CoordinatorClient {
 public:
  explicit CoordinatorClient(std::string url, std::uint64_t timeout_ms = 3600000);

  QueryResponse query(std::string_view sql, const QueryOptions& options = {}) const;
  std::vector<NodeInfo> nodes() const;
  // Raw JSON bodies of the table endpoints.
  std::string tables_json() const;
  std::string table_json(std::string_view name) const;
  std::string health_json() const;
  bool drop_table(std::string_view name) const;
  void kill(NodeId node) const;
  const std::string& url() const { return url_; }

 private:
  std::string url_;
  std::uint64_t timeout_ms_;
};

struct LocalClusterOptions {
  std::uint32_t nodes = 1;
  std::uint32_t replication = 1;
  // Serve coordinator and workers over loopback HTTP.
  bool http = false;
  std::uint64_t heartbeat_ms = kHeartbeatMs;
  CoordinatorOptions coordinator;
  WorkerOptions worker;
  NodeStoreOptions store;
};

// Coordinator plus N workers in one process over a shared block root; the
// single-process mode. <root>/_cluster.json records the node count and
// replication factor so later processes reopen the same layout.
class LocalCluster {
 public:
  explicit LocalCluster(std::filesystem::path root, LocalClusterOptions options = {});
  ~LocalCluster();
  LocalCluster(const LocalCluster&) = delete;
  LocalCluster& operator=(const LocalCluster&) = delete;

  // Reads <root>/_cluster.json if present.
  static std::optional<LocalClusterOptions> saved_layout(const std::filesystem::path& root);

  BlockStore& store() { return *store_; }
  Catalog& catalog() { return *catalog_; }
  Coordinator& coordinator() { return *coordinator_; }
  Worker& worker(NodeId id) { return *workers_.at(id); }
  std::uint32_t node_count() const { return options_.nodes; }
  const LocalClusterOptions& options() const { return options_; }
  const std::filesystem::path& root() const { return root_; }

  WriteTarget write_target();
  QueryResponse query(std::string_view sql, QueryOptions options = {});

  // Stops the worker (its heartbeats cease) and marks it dead.
  void kill(NodeId id);
  void revive(NodeId id);

  std::optional<std::string> coordinator_url() const;

 private:
  void heartbeat_loop();

  std::filesystem::path root_;
  LocalClusterOptions options_;
  std::unique_ptr<BlockStore> store_;
  std::shared_ptr<Catalog> catalog_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::shared_ptr<WorkerTransport> transport_;
  std::unique_ptr<Coordinator> coordinator_;
  std::unique_ptr<CoordinatorServer> coordinator_server_;
  std::vector<std::unique_ptr<WorkerServer>> worker_servers_;
  std::vector<std::unique_ptr<HeartbeatAgent>> agents_;
  std::mutex hb_mu_;
  std::condition_variable hb_cv_;
  bool hb_stop_ = false;
  std::thread hb_thread_;
};

}  // namespace rawdb
