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

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json_codec.h"
#include "rawdb/base64.h"
#include "rawdb/cluster.h"
#include "rawdb/error.h"
#include "rawdb/wire.h"

namespace rawdb {

namespace {

using wire::json;

constexpr const char* kJson = "application/json";
constexpr std::size_t kServerThreads = 32;

void send_error(httplib::Response& res, ErrorCode code, std::string_view message) {
  res.status = wire::http_status(code);
  res.set_content(wire::encode_error(code, message), kJson);
}

// Runs a handler, mapping exceptions to error bodies.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::kInternal, e.what());
    }
  };
}

void send_json(httplib::Response& res, const std::string& body, int status = 200) {
  res.status = status;
  res.set_content(body, kJson);
}

std::unique_ptr<httplib::Server> make_server() {
  auto server = std::make_unique<httplib::Server>();
  server->new_task_queue = [] { return new httplib::ThreadPool(kServerThreads); };
  server->set_payload_max_length(1ULL << 31);
  return server;
}

// Binds and starts serving on a background thread; returns the bound port.
int start(httplib::Server& server, std::thread& thread, const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::kIo, fmt::format("cannot bind {}:{}", host, port));
  thread = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  return bound;
}

httplib::Client make_client(const std::string& url, std::uint64_t timeout_ms) {
  httplib::Client client(url);
  client.set_connection_timeout(std::chrono::milliseconds(2000));
  client.set_read_timeout(std::chrono::milliseconds(timeout_ms));
  client.set_write_timeout(std::chrono::milliseconds(timeout_ms));
  return client;
}

// Throws kUnavailable when unreachable and the carried error on non-2xx.
std::string check(const httplib::Result& result, const std::string& what) {
  if (!result) {
    throw Error(ErrorCode::kUnavailable,
                fmt::format("{}: {}", what, httplib::to_string(result.error())));
  }
  if (result->status >= 300) throw wire::decode_error(result->body);
  return result->body;
}

}  // namespace

// ---- coordinator ----

struct CoordinatorServer::Impl {
  std::unique_ptr<httplib::Server> server = make_server();
  std::thread thread;
};

CoordinatorServer::CoordinatorServer(Coordinator& coordinator, std::string host, int port,
                                     std::function<void(NodeId)> on_kill)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)) {
  auto& s = *impl_->server;
  Coordinator* c = &coordinator;

  s.Post("/v1/query", guarded([c](const httplib::Request& req, httplib::Response& res) {
    auto [sql, options] = wire::decode_query_request(req.body);
    send_json(res, wire::encode_query_response(c->run_query(sql, options)));
  }));

  s.Get("/v1/tables", guarded([c](const httplib::Request&, httplib::Response& res) {
    send_json(res, wire::encode_table_list(c->catalog().tables()));
  }));

  s.Get(R"(/v1/tables/([^/]+))", guarded([c](const httplib::Request& req, httplib::Response& res) {
    send_json(res, wire::encode_table(*c->catalog().require_table(req.matches[1].str())));
  }));

  s.Post("/v1/tables", guarded([c](const httplib::Request& req, httplib::Response& res) {
    const json body = wire::parse(req.body);
    if (!body.contains("manifest") || !body["manifest"].is_string()) {
      throw Error(ErrorCode::kInvalidArgument, "expected {\"manifest\": <base64>}");
    }
    const TableDescriptor table = decode_manifest(base64_decode(body["manifest"].get<std::string>()));
    c->catalog().register_table(table);
    send_json(res, json{{"name", table.name}, {"blocks", table.data_blocks.size()}}.dump(), 201);
  }));

  s.Delete(R"(/v1/tables/([^/]+))", guarded([c](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1].str();
    if (!c->catalog().drop_table(name)) throw Error(ErrorCode::kNotFound, "unknown table '" + name + "'");
    send_json(res, json{{"dropped", name}}.dump());
  }));

  s.Get("/v1/nodes", guarded([c](const httplib::Request&, httplib::Response& res) {
    send_json(res, wire::encode_nodes(c->catalog().nodes()));
  }));

  s.Post("/v1/nodes/register", guarded([c](const httplib::Request& req, httplib::Response& res) {
    const json body = wire::parse(req.body);
    std::optional<std::uint64_t> capacity;
    if (body.contains("capacity_bytes") && !body["capacity_bytes"].is_null()) {
      capacity = body["capacity_bytes"].get<std::uint64_t>();
    }
    const auto id = body.at("node_id").get<NodeId>();
    const bool restart = c->catalog().node(id).has_value();
    const auto failed = c->register_worker(id, body.at("address").get<std::string>(),
                                           body.value("executors", 1u), capacity);
    json failed_ids = json::array();
    for (const auto& b : failed) failed_ids.push_back(b.to_string());
    send_json(res, json{{"node_id", id}, {"restart", restart}, {"failed", failed_ids}}.dump());
  }));

  s.Post(R"(/v1/nodes/(\d+)/heartbeat)",
         guarded([c](const httplib::Request& req, httplib::Response& res) {
           const auto id = static_cast<NodeId>(std::stoul(req.matches[1].str()));
           std::uint64_t used = 0;
           if (!req.body.empty()) used = wire::parse(req.body).value("used_bytes", std::uint64_t{0});
           c->catalog().heartbeat(id, used);
           send_json(res, json{{"state", node_state_name(c->catalog().state(id))}}.dump());
         }));

  s.Post(R"(/v1/nodes/(\d+)/kill)",
         guarded([c, on_kill](const httplib::Request& req, httplib::Response& res) {
           if (!c->options().allow_kill) {
             res.status = 403;
             res.set_content(
                 wire::encode_error(ErrorCode::kPrecondition, "fault injection is disabled"), kJson);
             return;
           }
           const auto id = static_cast<NodeId>(std::stoul(req.matches[1].str()));
           if (on_kill) {
             on_kill(id);
           } else {
             c->kill_node(id);
           }
           send_json(res, json{{"node_id", id}, {"state", "dead"}}.dump());
         }));

  s.Get("/v1/health", guarded([c](const httplib::Request&, httplib::Response& res) {
    send_json(res, json{{"status", "ok"},
                        {"role", "coordinator"},
                        {"root", c->catalog().root().string()},
                        {"nodes", c->catalog().nodes().size()},
                        {"live_nodes", c->catalog().live_nodes().size()},
                        {"tables", c->catalog().tables().size()}}
                       .dump());
  }));

  port_ = start(s, impl_->thread, host_, port);
}

CoordinatorServer::~CoordinatorServer() { stop(); }

std::string CoordinatorServer::url() const { return fmt::format("http://{}:{}", host_, port_); }

void CoordinatorServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->server->stop();
  impl_->thread.join();
}

// ---- worker ----

struct WorkerServer::Impl {
  std::unique_ptr<httplib::Server> server = make_server();
  std::thread thread;
};

WorkerServer::WorkerServer(Worker& worker, std::string host, int port)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)) {
  auto& s = *impl_->server;
  Worker* w = &worker;

  s.Post("/v1/fragment", guarded([w](const httplib::Request& req, httplib::Response& res) {
    const FragmentRequest request = wire::decode_fragment_request(req.body);
    send_json(res, wire::encode_partial_result(w->execute(request)));
  }));

  s.Post("/v1/verify", guarded([w](const httplib::Request& req, httplib::Response& res) {
    if (w->killed()) throw Error(ErrorCode::kUnavailable, fmt::format("node {} is down", w->id()));
    std::vector<BlockMeta> blocks;
    const json body = wire::parse(req.body);
    for (const auto& b : body.at("blocks")) blocks.push_back(wire::block_meta_from_json(b));
    const auto failed = w->verify(blocks);
    json out = json::array();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (std::find(failed.begin(), failed.end(), blocks[i].id) != failed.end()) out.push_back(i);
    }
    send_json(res, json{{"failed", out}}.dump());
  }));

  s.Post("/v1/kill", guarded([w](const httplib::Request&, httplib::Response& res) {
    w->kill();
    send_json(res, json{{"node_id", w->id()}, {"killed", true}}.dump());
  }));

  s.Post("/v1/revive", guarded([w](const httplib::Request&, httplib::Response& res) {
    w->revive();
    send_json(res, json{{"node_id", w->id()}, {"killed", false}}.dump());
  }));

  s.Get("/v1/health", guarded([w](const httplib::Request&, httplib::Response& res) {
    send_json(res, json{{"status", w->killed() ? "killed" : "ok"},
                        {"role", "worker"},
                        {"node_id", w->id()},
                        {"executors", w->executors()},
                        {"fragments_executed", w->fragments_executed()},
                        {"used_bytes", w->store().used_bytes()}}
                       .dump());
  }));

  port_ = start(s, impl_->thread, host_, port);
}

WorkerServer::~WorkerServer() { stop(); }

std::string WorkerServer::url() const { return fmt::format("http://{}:{}", host_, port_); }

void WorkerServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->server->stop();
  impl_->thread.join();
}

// ---- transport ----

HttpTransport::HttpTransport(std::shared_ptr<const Catalog> catalog, std::uint64_t request_timeout_ms)
    : catalog_(std::move(catalog)), timeout_ms_(request_timeout_ms) {}

std::string HttpTransport::address(NodeId node) const {
  const auto info = catalog_->node(node);
  if (!info || info->address.empty()) {
    throw Error(ErrorCode::kUnavailable, fmt::format("no address for node {}", node));
  }
  return info->address;
}

PartialResult HttpTransport::execute(NodeId node, const FragmentRequest& request) {
  auto client = make_client(address(node), timeout_ms_);
  const auto body = check(client.Post("/v1/fragment", wire::encode_fragment_request(request), kJson),
                          fmt::format("node {}", node));
  return wire::decode_partial_result(body);
}

std::vector<BlockId> HttpTransport::verify(NodeId node, const std::vector<BlockMeta>& blocks) {
  json list = json::array();
  for (const auto& b : blocks) list.push_back(wire::to_json(b));
  auto client = make_client(address(node), timeout_ms_);
  const auto body = check(client.Post("/v1/verify", json{{"blocks", list}}.dump(), kJson),
                          fmt::format("node {}", node));
  std::vector<BlockId> failed;
  const json parsed = wire::parse(body);
  for (const auto& i : parsed.at("failed")) failed.push_back(blocks.at(i.get<std::size_t>()).id);
  return failed;
}

void HttpTransport::kill(NodeId node) {
  auto client = make_client(address(node), timeout_ms_);
  check(client.Post("/v1/kill", "", kJson), fmt::format("node {}", node));
}

// ---- heartbeats and remote registration ----

HeartbeatAgent::HeartbeatAgent(std::string coordinator_url, Worker& worker, std::string worker_url,
                               std::uint64_t interval_ms)
    : coordinator_url_(std::move(coordinator_url)),
      worker_(worker),
      worker_url_(std::move(worker_url)),
      interval_ms_(interval_ms) {
  thread_ = std::thread([this] {
    bool registered = false;
    auto client = make_client(coordinator_url_, 5000);
    std::unique_lock lock(mu_);
    while (!stop_) {
      lock.unlock();
      if (worker_.killed()) {
        registered = false;
      } else if (!registered) {
        const json body = {{"node_id", worker_.id()},
                           {"address", worker_url_},
                           {"executors", worker_.executors()}};
        auto r = client.Post("/v1/nodes/register", body.dump(), kJson);
        registered = r && r->status == 200;
        if (!registered) spdlog::debug("node {}: registration pending", worker_.id());
      } else {
        const json body = {{"used_bytes", worker_.store().used_bytes()}};
        auto r = client.Post(fmt::format("/v1/nodes/{}/heartbeat", worker_.id()), body.dump(), kJson);
        if (r && r->status == 404) registered = false;
      }
      lock.lock();
      cv_.wait_for(lock, std::chrono::milliseconds(interval_ms_), [this] { return stop_; });
    }
  });
}

HeartbeatAgent::~HeartbeatAgent() { stop(); }

void HeartbeatAgent::stop() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

HttpTableRegistry::HttpTableRegistry(std::string coordinator_url) : url_(std::move(coordinator_url)) {}

bool HttpTableRegistry::has_table(std::string_view name) const {
  auto client = make_client(url_, 30000);
  auto r = client.Get(fmt::format("/v1/tables/{}", name));
  if (!r) throw Error(ErrorCode::kUnavailable, "coordinator unreachable: " + httplib::to_string(r.error()));
  return r->status == 200;
}

void HttpTableRegistry::register_table(const TableDescriptor& table) {
  auto client = make_client(url_, 600000);
  const json body = {{"manifest", base64_encode(encode_manifest(table))}};
  check(client.Post("/v1/tables", body.dump(), kJson), "coordinator");
}

CoordinatorClient::CoordinatorClient(std::string url, std::uint64_t timeout_ms)
    : url_(std::move(url)), timeout_ms_(timeout_ms) {}

QueryResponse CoordinatorClient::query(std::string_view sql, const QueryOptions& options) const {
  auto client = make_client(url_, timeout_ms_);
  return wire::decode_query_response(
      check(client.Post("/v1/query", wire::encode_query_request(sql, options), kJson), "coordinator"));
}

std::vector<NodeInfo> CoordinatorClient::nodes() const {
  auto client = make_client(url_, timeout_ms_);
  return wire::decode_nodes(check(client.Get("/v1/nodes"), "coordinator"));
}

std::string CoordinatorClient::tables_json() const {
  auto client = make_client(url_, timeout_ms_);
  return check(client.Get("/v1/tables"), "coordinator");
}

std::string CoordinatorClient::table_json(std::string_view name) const {
  auto client = make_client(url_, timeout_ms_);
  return check(client.Get(fmt::format("/v1/tables/{}", name)), "coordinator");
}

std::string CoordinatorClient::health_json() const {
  auto client = make_client(url_, timeout_ms_);
  return check(client.Get("/v1/health"), "coordinator");
}

bool CoordinatorClient::drop_table(std::string_view name) const {
  auto client = make_client(url_, timeout_ms_);
  auto r = client.Delete(fmt::format("/v1/tables/{}", name));
  if (r && r->status == 404) return false;
  check(r, "coordinator");
  return true;
}

void CoordinatorClient::kill(NodeId node) const {
  auto client = make_client(url_, timeout_ms_);
  check(client.Post(fmt::format("/v1/nodes/{}/kill", node), "", kJson), "coordinator");
}

}  // namespace rawdb
