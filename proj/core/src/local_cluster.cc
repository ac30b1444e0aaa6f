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

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json_codec.h"
#include "rawdb/cluster.h"
#include "rawdb/error.h"

namespace rawdb {

namespace fs = std::filesystem;

namespace {

constexpr const char* kLayoutFile = "_cluster.json";

}  // namespace

std::optional<LocalClusterOptions> LocalCluster::saved_layout(const fs::path& root) {
  std::ifstream in(root / kLayoutFile);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  const auto j = wire::parse(buf.str());
  LocalClusterOptions options;
  options.nodes = j.value("nodes", 1u);
  options.replication = j.value("replication", 1u);
  return options;
}

LocalCluster::LocalCluster(fs::path root, LocalClusterOptions options)
    : root_(std::move(root)), options_(std::move(options)) {
  if (options_.nodes == 0) throw Error(ErrorCode::kInvalidArgument, "a cluster needs at least one node");
  if (options_.replication == 0 || options_.replication > options_.nodes) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("replication {} does not fit {} node(s)", options_.replication, options_.nodes));
  }
  fs::create_directories(root_);
  if (auto saved = saved_layout(root_);
      saved && (saved->nodes != options_.nodes || saved->replication != options_.replication)) {
    throw Error(ErrorCode::kPrecondition,
                fmt::format("{} holds a {}-node cluster with replication {}", root_.string(),
                            saved->nodes, saved->replication));
  }
  {
    std::ofstream out(root_ / kLayoutFile, std::ios::trunc);
    out << wire::json{{"nodes", options_.nodes}, {"replication", options_.replication}}.dump(2) << '\n';
  }

  store_ = std::make_unique<BlockStore>(root_, options_.nodes, options_.store);
  catalog_ = std::make_shared<Catalog>(root_, monotonic_ms, options_.heartbeat_ms);
  catalog_->load();
  for (NodeId i = 0; i < options_.nodes; ++i) {
    workers_.push_back(std::make_unique<Worker>(i, store_->node(i), options_.worker));
  }

  if (!options_.http) {
    auto transport = std::make_shared<InProcessTransport>();
    for (auto& w : workers_) transport->add(w.get());
    transport_ = transport;
    coordinator_ = std::make_unique<Coordinator>(catalog_, transport_, options_.coordinator);
    for (auto& w : workers_) {
      catalog_->register_node(w->id(), fmt::format("inproc://{}", w->id()), w->executors());
    }
    hb_thread_ = std::thread([this] { heartbeat_loop(); });
    return;
  }

  transport_ = std::make_shared<HttpTransport>(catalog_);
  coordinator_ = std::make_unique<Coordinator>(catalog_, transport_, options_.coordinator);
  coordinator_server_ = std::make_unique<CoordinatorServer>(*coordinator_, "127.0.0.1", 0,
                                                            [this](NodeId id) { kill(id); });
  for (auto& w : workers_) {
    worker_servers_.push_back(std::make_unique<WorkerServer>(*w, "127.0.0.1", 0));
    agents_.push_back(std::make_unique<HeartbeatAgent>(coordinator_server_->url(), *w,
                                                       worker_servers_.back()->url(),
                                                       std::max<std::uint64_t>(1, options_.heartbeat_ms / 3)));
  }
  const auto deadline = monotonic_ms() + 10000;
  while (catalog_->live_nodes().size() < options_.nodes) {
    if (monotonic_ms() > deadline) throw Error(ErrorCode::kUnavailable, "workers failed to register");
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

LocalCluster::~LocalCluster() {
  {
    std::lock_guard lock(hb_mu_);
    hb_stop_ = true;
  }
  hb_cv_.notify_all();
  if (hb_thread_.joinable()) hb_thread_.join();
  for (auto& a : agents_) a->stop();
}

void LocalCluster::heartbeat_loop() {
  const auto interval = std::chrono::milliseconds(std::max<std::uint64_t>(1, options_.heartbeat_ms / 3));
  std::unique_lock lock(hb_mu_);
  while (!hb_stop_) {
    for (auto& w : workers_) {
      if (!w->killed()) catalog_->heartbeat(w->id(), w->store().used_bytes());
    }
    hb_cv_.wait_for(lock, interval, [this] { return hb_stop_; });
  }
}

WriteTarget LocalCluster::write_target() {
  WriteTarget target;
  target.store = store_.get();
  target.replication = options_.replication;
  target.live_nodes = catalog_->live_nodes();
  target.registry = catalog_.get();
  return target;
}

QueryResponse LocalCluster::query(std::string_view sql, QueryOptions options) {
  return coordinator_->run_query(sql, options);
}

void LocalCluster::kill(NodeId id) {
  worker(id).kill();
  catalog_->mark_dead(id);
}

void LocalCluster::revive(NodeId id) {
  Worker& w = worker(id);
  w.revive();
  const std::string address = id < worker_servers_.size() ? worker_servers_[id]->url()
                                                           : fmt::format("inproc://{}", id);
  coordinator_->register_worker(id, address, w.executors());
}

std::optional<std::string> LocalCluster::coordinator_url() const {
  if (!coordinator_server_) return std::nullopt;
  return coordinator_server_->url();
}

}  // namespace rawdb
