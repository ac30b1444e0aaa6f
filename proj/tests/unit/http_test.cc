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

#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"
#include "rawdb/cluster.h"
#include "rawdb/error.h"
#include "rawdb/wire.h"
#include "test_support.h"

namespace rawdb {
namespace {

using json = nlohmann::json;
using testing::TempDir;

class HttpCluster : public ::testing::Test {
 protected:
  void SetUp() override {
    LocalClusterOptions o;
    o.nodes = 3;
    o.replication = 2;
    o.http = true;
    o.heartbeat_ms = 300;
    o.coordinator.allow_kill = true;
    o.worker.executors = 2;
    cluster_ = std::make_unique<LocalCluster>(dir_.path(), o);
    std::mt19937_64 rng(3);
    csv_ = testing::random_int_csv(rng, 500, 6, 1000, 9999);
    DecoratorConfig cfg;
    cfg.pm = PmConfig::rate(2);
    cfg.vi_attrs = {1};
    cfg.stats = StatsConfig{{0}};
    cfg.target_block_size = 4096;
    HttpTableRegistry registry(*cluster_->coordinator_url());
    WriteTarget target = cluster_->write_target();
    target.registry = &registry;
    testing::write_csv_table(target, "t", Schema::uniform_int(6), csv_, cfg);
    client_ = std::make_unique<httplib::Client>(*cluster_->coordinator_url());
  }

  json post_query(const std::string& sql, json options = json::object(), int expect = 200) {
    auto r = client_->Post("/v1/query", json{{"sql", sql}, {"options", options}}.dump(),
                           "application/json");
    EXPECT_TRUE(r);
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << r->body;
    return json::parse(r->body);
  }

  TempDir dir_;
  std::unique_ptr<LocalCluster> cluster_;
  std::unique_ptr<httplib::Client> client_;
  std::string csv_;
};

TEST_F(HttpCluster, QueryEndpointReturnsRowsAndReport) {
  const json j = post_query("SELECT a0, a2 FROM t WHERE a1 < 3000", {{"use_index", "off"}});
  EXPECT_EQ(j["columns"], json({"a0", "a2"}));
  std::size_t expected = 0;
  for (const auto& line : testing::split_lines(csv_)) {
    if (std::stoll(testing::split_row(line)[1]) < 3000) ++expected;
  }
  EXPECT_EQ(j["rows"].size(), expected);
  const auto& rep = j["report"];
  EXPECT_EQ(rep["retries"], 0);
  EXPECT_EQ(rep["fragments"].size(), cluster_->catalog().require_table("t")->data_blocks.size());
  EXPECT_EQ(rep["counters"]["rows_examined"], 500);
  for (const auto& f : rep["fragments"]) {
    EXPECT_TRUE(f.contains("node"));
    EXPECT_TRUE(f.contains("latency_ms"));
    EXPECT_EQ(f["access"], "full");
  }

  // The typed client decoder sees the same response.
  auto raw = client_->Post("/v1/query", wire::encode_query_request("SELECT count(*) FROM t", {}),
                           "application/json");
  ASSERT_TRUE(raw);
  const auto decoded = wire::decode_query_response(raw->body);
  ASSERT_EQ(decoded.result.rows.size(), 1u);
  EXPECT_EQ(decoded.result.rows[0][0], Value(std::int64_t{500}));
}

TEST_F(HttpCluster, ErrorsCarryCodeAndMessage) {
  const json bad = post_query("SELEC a0 FROM t", json::object(), 400);
  EXPECT_EQ(bad["error"]["code"], "syntax");
  EXPECT_NE(bad["error"]["message"].get<std::string>().find("line 1"), std::string::npos);
  const json unsupported = post_query("SELECT a0 FROM t WHERE a0 = 1 OR a0 = 2", json::object(), 400);
  EXPECT_EQ(unsupported["error"]["code"], "unsupported");
  const json missing = post_query("SELECT a0 FROM nope", json::object(), 400);
  EXPECT_EQ(missing["error"]["code"], "plan");
  auto r = client_->Post("/v1/query", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json::parse(r->body)["error"]["code"], "decode");
}

TEST_F(HttpCluster, TablesAndNodes) {
  auto list = client_->Get("/v1/tables");
  ASSERT_TRUE(list);
  const json tables = json::parse(list->body)["tables"];
  ASSERT_EQ(tables.size(), 1u);
  EXPECT_EQ(tables[0]["name"], "t");
  EXPECT_EQ(tables[0]["record_count"], 500);

  auto one = client_->Get("/v1/tables/t");
  ASSERT_TRUE(one);
  ASSERT_EQ(one->status, 200);
  const json t = json::parse(one->body);
  EXPECT_EQ(t["schema"].size(), 6u);
  ASSERT_FALSE(t["blocks"].empty());
  for (const auto& b : t["blocks"]) {
    EXPECT_EQ(b["replicas"].size(), 2u);
    EXPECT_EQ(b["replicas"][0]["tier"], "memory");
    EXPECT_EQ(b["pm"]["replicas"], b["replicas"]);
  }
  EXPECT_EQ(t["key_attrs"], json({"a1"}));

  auto missing = client_->Get("/v1/tables/zzz");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  auto nodes = client_->Get("/v1/nodes");
  ASSERT_TRUE(nodes);
  const auto infos = wire::decode_nodes(nodes->body);
  ASSERT_EQ(infos.size(), 3u) << nodes->body;
  for (const auto& n : infos) {
    EXPECT_EQ(n.state, NodeState::kLive);
    EXPECT_EQ(n.executors, 2u);
  }
}

TEST_F(HttpCluster, HealthOnBothRoles) {
  auto h = client_->Get("/v1/health");
  ASSERT_TRUE(h);
  const json j = json::parse(h->body);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["role"], "coordinator");
  EXPECT_EQ(j["nodes"], 3);

  const auto info = cluster_->catalog().node(0);
  ASSERT_TRUE(info);
  httplib::Client worker(info->address);
  auto w = worker.Get("/v1/health");
  ASSERT_TRUE(w);
  EXPECT_EQ(json::parse(w->body)["role"], "worker");
  EXPECT_EQ(json::parse(w->body)["node_id"], 0);
}

TEST_F(HttpCluster, KillEndpointTriggersFailover) {
  const json before = post_query("SELECT a3 FROM t ORDER BY a3 LIMIT 20");
  auto k = client_->Post("/v1/nodes/1/kill", "", "application/json");
  ASSERT_TRUE(k);
  EXPECT_EQ(k->status, 200);
  EXPECT_EQ(cluster_->catalog().state(1), NodeState::kDead);
  const json after = post_query("SELECT a3 FROM t ORDER BY a3 LIMIT 20");
  EXPECT_EQ(after["rows"], before["rows"]);
  for (const auto& f : after["report"]["fragments"]) EXPECT_NE(f["node"], 1);

  // Heartbeats stop while killed; revival re-registers.
  cluster_->revive(1);
  EXPECT_EQ(cluster_->catalog().state(1), NodeState::kLive);
}

TEST_F(HttpCluster, WorkerFragmentEndpoint) {
  const auto t = cluster_->catalog().require_table("t");
  FragmentRequest req;
  req.query_id = "manual";
  req.schema = t->schema;
  req.data_block = t->data_blocks[0];
  req.pm_block = t->pm_blocks[0];
  req.scan.block = req.data_block.id;
  req.scan.projection = {0};
  httplib::Client worker(cluster_->catalog().node(req.data_block.replicas[0].node)->address);
  auto r = worker.Post("/v1/fragment", wire::encode_fragment_request(req), "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const auto partial = wire::decode_partial_result(r->body);
  EXPECT_EQ(partial.rows.size(), req.data_block.record_count);
  EXPECT_TRUE(partial.pm_used);

  // A node without the replica answers not_here.
  NodeId other = 0;
  while (req.data_block.has_replica_on(other)) ++other;
  httplib::Client stranger(cluster_->catalog().node(other)->address);
  auto nh = stranger.Post("/v1/fragment", wire::encode_fragment_request(req), "application/json");
  ASSERT_TRUE(nh);
  EXPECT_EQ(nh->status, 503);
  EXPECT_EQ(json::parse(nh->body)["error"]["code"], "not_here");
}

TEST(HttpKill, DisabledByDefault) {
  TempDir dir;
  LocalClusterOptions o;
  o.nodes = 1;
  o.http = true;
  LocalCluster c(dir.path(), o);
  httplib::Client client(*c.coordinator_url());
  auto r = client.Post("/v1/nodes/0/kill", "", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 403);
  EXPECT_EQ(c.catalog().state(0), NodeState::kLive);
}

}  // namespace
}  // namespace rawdb
