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
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include <gtest/gtest.h>

#include "rawdb/cluster.h"
#include "rawdb/error.h"
#include "test_support.h"

namespace rawdb {
namespace {

using testing::TempDir;

struct FakeClock {
  std::shared_ptr<std::atomic<std::uint64_t>> now = std::make_shared<std::atomic<std::uint64_t>>(1000);
  Clock clock() const {
    auto n = now;
    return [n] { return n->load(); };
  }
  void advance(std::uint64_t ms) { *now += ms; }
};

// 100 rows of 70 bytes per 7000-byte block.
std::string fixed_width_csv(std::uint64_t seed, std::size_t rows) {
  std::mt19937_64 rng(seed);
  return testing::random_int_csv(rng, rows, 10, 100000, 999999);
}

DecoratorConfig small_blocks(std::vector<std::uint32_t> vi = {0}) {
  DecoratorConfig c;
  c.pm = PmConfig::rate(3);
  c.vi_attrs = std::move(vi);
  c.stats = StatsConfig{{0, 1}};
  c.target_block_size = 7000;
  return c;
}

TEST(Catalog, LivenessFollowsHeartbeatGaps) {
  FakeClock fc;
  Catalog catalog({}, fc.clock(), 1000);
  EXPECT_FALSE(catalog.register_node(0, "a"));
  EXPECT_EQ(catalog.state(0), NodeState::kLive);
  fc.advance(1000);
  EXPECT_EQ(catalog.state(0), NodeState::kLive);
  fc.advance(1);
  EXPECT_EQ(catalog.state(0), NodeState::kSuspect);
  fc.advance(2000);
  EXPECT_EQ(catalog.state(0), NodeState::kDead);
  catalog.heartbeat(0);
  EXPECT_EQ(catalog.state(0), NodeState::kLive);
  catalog.mark_dead(0);
  catalog.heartbeat(0);
  EXPECT_EQ(catalog.state(0), NodeState::kDead);
  EXPECT_TRUE(catalog.register_node(0, "a"));
  EXPECT_EQ(catalog.state(0), NodeState::kLive);
  EXPECT_THROW(catalog.heartbeat(7), Error);
  EXPECT_EQ(catalog.state(7), NodeState::kDead);
}

class ClusterFixture : public ::testing::Test {
 protected:
  std::unique_ptr<LocalCluster> make(std::uint32_t nodes, std::uint32_t replication,
                                     const std::filesystem::path& root, bool http = false,
                                     CoordinatorOptions copts = {}) {
    LocalClusterOptions o;
    o.nodes = nodes;
    o.replication = replication;
    o.http = http;
    o.coordinator = copts;
    o.worker.executors = 2;
    return std::make_unique<LocalCluster>(root, o);
  }

  TableDescriptor load(LocalCluster& c, const std::string& name, const std::string& csv,
                       const DecoratorConfig& config = small_blocks()) {
    return testing::write_csv_table(c.write_target(), name, Schema::uniform_int(10), csv, config);
  }

  TempDir dir_;
};

TEST_F(ClusterFixture, LocationsListReplicasMemoryTierFirst) {
  auto c = make(4, 3, dir_.path());
  const auto t = load(*c, "t", fixed_width_csv(1, 300));
  ASSERT_EQ(t.data_blocks.size(), 3u);
  const auto locs = c->catalog().lookup_locations("t");
  ASSERT_EQ(locs.size(), 3u);
  for (const auto& loc : locs) {
    ASSERT_EQ(loc.candidates.size(), 3u);
    EXPECT_EQ(loc.candidates.front().tier, StorageTier::kMemory);
    EXPECT_EQ(loc.candidates.front().node, loc.data.replicas.front().node);
    ASSERT_TRUE(loc.pm && loc.vi);
    EXPECT_EQ(loc.pm->ordinal, loc.ordinal);
    EXPECT_EQ(loc.vi->kind, BlockKind::kVi);
    EXPECT_FALSE(loc.unavailable);
  }
  EXPECT_THROW(c->catalog().lookup_locations("missing"), Error);

  for (const auto& r : locs[0].data.replicas) c->kill(r.node);
  const auto after = c->catalog().lookup_locations("t");
  EXPECT_TRUE(after[0].unavailable);
  EXPECT_TRUE(after[0].candidates.empty());
}

TEST_F(ClusterFixture, SuspectReplicasAreListedLast) {
  FakeClock fc;
  Catalog catalog({}, fc.clock(), 1000);
  for (NodeId i = 0; i < 3; ++i) catalog.register_node(i, "x");
  TableDescriptor t;
  t.name = "t";
  t.schema = Schema::uniform_int(1);
  BlockMeta b;
  b.id = {"t", BlockKind::kData, 0};
  b.length = 2;
  b.record_count = 1;
  b.replicas = {{0, StorageTier::kMemory}, {1, StorageTier::kDisk}, {2, StorageTier::kDisk}};
  t.data_blocks.push_back(b);
  catalog.register_table(t);
  fc.advance(1500);
  catalog.heartbeat(1);
  catalog.heartbeat(2);
  const auto locs = catalog.lookup_locations("t");
  ASSERT_EQ(locs[0].candidates.size(), 3u);
  EXPECT_EQ(locs[0].candidates[0].node, 1u);
  EXPECT_EQ(locs[0].candidates[2].node, 0u);
}

TEST_F(ClusterFixture, DuplicateTableRejectedAndConcurrentRegistrationsVisible) {
  auto c = make(2, 1, dir_.path());
  load(*c, "a", fixed_width_csv(2, 50));
  try {
    load(*c, "a", fixed_width_csv(2, 50));
    FAIL() << "duplicate accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlreadyExists);
  }
  std::thread t1([&] { load(*c, "b", fixed_width_csv(3, 200)); });
  std::thread t2([&] { load(*c, "c", fixed_width_csv(4, 200)); });
  t1.join();
  t2.join();
  for (const char* name : {"b", "c"}) {
    const auto t = c->catalog().require_table(name);
    EXPECT_EQ(t->record_count(), 200u);
    EXPECT_EQ(t->pm_blocks.size(), t->data_blocks.size());
  }
}

TEST_F(ClusterFixture, CatalogPersistsAcrossReopen) {
  const std::string csv = fixed_width_csv(5, 250);
  ResultSet before;
  {
    auto c = make(2, 2, dir_.path());
    load(*c, "t", csv);
    before = c->query("SELECT a0, a3 FROM t WHERE a1 < 400000").result;
  }
  auto reopened = LocalCluster::saved_layout(dir_.path());
  ASSERT_TRUE(reopened);
  EXPECT_EQ(reopened->nodes, 2u);
  EXPECT_EQ(reopened->replication, 2u);
  auto c = make(2, 2, dir_.path());
  EXPECT_TRUE(c->catalog().has_table("t"));
  EXPECT_EQ(c->query("SELECT a0, a3 FROM t WHERE a1 < 400000").result, before);
  EXPECT_THROW(make(3, 2, dir_.path()), Error);
}

TEST_F(ClusterFixture, HealthyClusterMatchesSingleNode) {
  const std::string csv = fixed_width_csv(6, 800);
  TempDir single_root;
  auto single = make(1, 1, single_root.path());
  load(*single, "t", csv);
  auto c = make(4, 3, dir_.path());
  const auto t = load(*c, "t", csv);
  ASSERT_EQ(t.data_blocks.size(), 8u);

  for (const char* sql : {"SELECT a0, a5 FROM t WHERE a2 < 300000",
                          "SELECT count(*), sum(a1), min(a4), max(a4) FROM t WHERE a0 > 500000",
                          "SELECT a1, a2 FROM t ORDER BY a2 DESC LIMIT 7",
                          "SELECT * FROM t WHERE a0 = 123456"}) {
    const auto dist = c->query(sql);
    const auto ref = single->query(sql);
    EXPECT_EQ(dist.result, ref.result) << sql;
    EXPECT_EQ(dist.report.fragments.size(), 8u);
    EXPECT_EQ(dist.report.retries, 0u);
    for (const auto& f : dist.report.fragments) {
      const auto& meta = t.data_blocks.at(f.ordinal);
      EXPECT_EQ(f.node, meta.replicas.front().node) << "first dispatch left the memory tier";
      EXPECT_EQ(meta.replicas.front().tier, StorageTier::kMemory);
    }
  }
}

TEST_F(ClusterFixture, KilledWorkerFragmentsMoveToReplicas) {
  const std::string csv = fixed_width_csv(7, 800);
  auto c = make(4, 2, dir_.path());
  load(*c, "t", csv);
  const std::string sql = "SELECT a0, a1 FROM t WHERE a3 > 200000 ORDER BY a1 LIMIT 50";
  const auto healthy = c->query(sql);

  // Down but not yet noticed by the catalog: dispatches fail and are retried.
  c->worker(1).kill();
  const auto degraded = c->query(sql);
  EXPECT_EQ(degraded.result, healthy.result);
  EXPECT_GT(degraded.report.retries, 0u);
  for (const auto& f : degraded.report.fragments) EXPECT_NE(f.node, 1u);

  c->catalog().mark_dead(1);
  const auto known = c->query(sql);
  EXPECT_EQ(known.result, healthy.result);
  EXPECT_EQ(known.report.retries, 0u);
}

TEST_F(ClusterFixture, FragmentFailingEverywhereNamesBlock) {
  auto c = make(2, 2, dir_.path());
  load(*c, "t", fixed_width_csv(8, 200));
  c->worker(0).kill();
  c->worker(1).kill();
  try {
    c->query("SELECT a0 FROM t");
    FAIL() << "query succeeded with every worker down";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnavailable);
    EXPECT_NE(std::string(e.what()).find("t/data."), std::string::npos) << e.what();
  }
  c->catalog().mark_dead(0);
  c->catalog().mark_dead(1);
  try {
    c->query("SELECT a0 FROM t");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnavailable);
    EXPECT_NE(std::string(e.what()).find("t/data.0"), std::string::npos) << e.what();
  }
}

TEST_F(ClusterFixture, SlowWorkerIsHedgedAndDuplicateDropped) {
  auto c = make(2, 2, dir_.path());
  load(*c, "t", fixed_width_csv(9, 400));
  const std::string sql = "SELECT count(*), sum(a2) FROM t";
  const auto healthy = c->query(sql);
  c->worker(0).set_delay_ms(1500);
  QueryOptions o;
  o.timeout_ms = 100;
  const auto hedged = c->query(sql, o);
  EXPECT_EQ(hedged.result, healthy.result);
  EXPECT_GT(hedged.report.hedges, 0u);
  EXPECT_LT(hedged.report.latency_ms, 1400);
  for (const auto& f : hedged.report.fragments) {
    EXPECT_EQ(f.node, 1u);
    if (f.hedged) EXPECT_GE(f.retries, 1u);
  }
  c->worker(0).set_delay_ms(0);
}

TEST_F(ClusterFixture, AdaptiveTimeoutUsesMedianWithFloor) {
  CoordinatorOptions co;
  co.hedge_floor_ms = 250;
  auto c = make(1, 1, dir_.path(), false, co);
  QueryOptions o;
  EXPECT_DOUBLE_EQ(c->coordinator().current_timeout_ms(o), 1000.0);
  load(*c, "t", fixed_width_csv(10, 100));
  c->query("SELECT a0 FROM t");
  EXPECT_DOUBLE_EQ(c->coordinator().current_timeout_ms(o), 250.0);
  o.timeout_ms = 40;
  EXPECT_DOUBLE_EQ(c->coordinator().current_timeout_ms(o), 40.0);
}

TEST_F(ClusterFixture, ReRegistrationRevalidatesReplicas) {
  CoordinatorOptions co;
  co.revalidation_sample = 1000;
  auto c = make(2, 2, dir_.path(), false, co);
  const auto t = load(*c, "t", fixed_width_csv(11, 300));
  const std::string sql = "SELECT a0 FROM t WHERE a1 > 100";
  const auto healthy = c->query(sql);

  // Corrupt node 1's replica of block 0.
  const auto& meta = t.data_blocks[0];
  const auto tier = std::find_if(meta.replicas.begin(), meta.replicas.end(),
                                 [](const Replica& r) { return r.node == 1; })->tier;
  const auto path = c->store().node(1).path_for(meta.id, tier);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put('x');
  }
  c->store().node(1).drop_memory_cache();
  const auto failed = c->coordinator().register_worker(1, "inproc://1", 2);
  ASSERT_EQ(failed.size(), 1u);
  EXPECT_EQ(failed[0], meta.id);
  const auto locs = c->catalog().lookup_locations("t");
  for (const auto& r : locs[0].candidates) EXPECT_NE(r.node, 1u);
  EXPECT_EQ(c->catalog().state(1), NodeState::kLive);

  c->kill(0);
  EXPECT_THROW(c->query(sql), Error);
}

TEST_F(ClusterFixture, CorruptReplicaFailsOverOnRead) {
  auto c = make(2, 2, dir_.path());
  const auto t = load(*c, "t", fixed_width_csv(12, 300));
  const std::string sql = "SELECT a0, a9 FROM t";
  const auto healthy = c->query(sql);
  const auto& meta = t.data_blocks[1];
  const NodeId first = meta.replicas.front().node;
  {
    std::fstream f(c->store().node(first).path_for(meta.id, meta.replicas.front().tier),
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('9');
  }
  c->store().node(first).drop_memory_cache();
  const auto r = c->query(sql);
  EXPECT_EQ(r.result, healthy.result);
  EXPECT_GT(r.report.retries, 0u);
}

TEST_F(ClusterFixture, NonRetriableErrorsFailFast) {
  auto c = make(2, 1, dir_.path());
  load(*c, "t", fixed_width_csv(13, 100));
  try {
    c->query("SELECT nope FROM t");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPlan);
  }
  try {
    c->query("SELECT a0 FROM t WHERE a0 = 1 OR a1 = 2");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

TEST_F(ClusterFixture, ExplainAndSet) {
  auto c = make(1, 1, dir_.path());
  load(*c, "t", fixed_width_csv(14, 100));
  const auto e = c->query("EXPLAIN SELECT a1 FROM t WHERE a0 = 5");
  ASSERT_EQ(e.result.columns, std::vector<std::string>{"plan"});
  EXPECT_FALSE(e.result.rows.empty());
  EXPECT_TRUE(e.report.fragments.empty());
  const auto s = c->query("SET use_index = off");
  ASSERT_EQ(s.result.rows.size(), 1u);
  EXPECT_THROW(c->query("SET bogus = 1"), Error);
}

TEST_F(ClusterFixture, KillGatedByOption) {
  auto c = make(2, 1, dir_.path());
  try {
    c->coordinator().kill_node(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
  }
  CoordinatorOptions co;
  co.allow_kill = true;
  TempDir other;
  auto k = make(2, 1, other.path(), false, co);
  k->coordinator().kill_node(1);
  EXPECT_EQ(k->catalog().state(1), NodeState::kDead);
  EXPECT_TRUE(k->worker(1).killed());
}

// Exactly-once merge under random failures and delays.
TEST_F(ClusterFixture, ResultsIndependentOfFailurePattern) {
  const std::string csv = fixed_width_csv(15, 1000);
  auto c = make(4, 3, dir_.path());
  load(*c, "t", csv);
  const std::vector<std::string> queries = {
      "SELECT a0, a1 FROM t WHERE a2 BETWEEN 200000 AND 600000",
      "SELECT count(*), avg(a3) FROM t WHERE a4 < 500000",
      "SELECT a5 FROM t ORDER BY a5 LIMIT 13",
  };
  std::vector<ResultSet> healthy;
  for (const auto& q : queries) healthy.push_back(c->query(q).result);

  std::mt19937_64 rng(99);
  for (int round = 0; round < 6; ++round) {
    std::vector<NodeId> down;
    const NodeId a = static_cast<NodeId>(rng() % 4);
    const NodeId b = static_cast<NodeId>((a + 1 + rng() % 3) % 4);
    c->worker(a).kill();
    if (round % 2) c->worker(b).kill();
    c->worker((a + 2) % 4).set_delay_ms(round % 3 == 0 ? 200 : 0);
    QueryOptions o;
    o.timeout_ms = 50;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      EXPECT_EQ(c->query(queries[i], o).result, healthy[i]) << queries[i] << " round " << round;
    }
    for (NodeId n = 0; n < 4; ++n) {
      c->worker(n).revive();
      c->worker(n).set_delay_ms(0);
    }
  }
}

TEST_F(ClusterFixture, JoinAcrossNodes) {
  auto c = make(3, 2, dir_.path());
  std::string big, small;
  for (int i = 0; i < 600; ++i) big += fmt::format("{},{}\n", i % 50, i);
  for (int k = 0; k < 50; k += 5) small += fmt::format("{},{}\n", k, k * 10);
  DecoratorConfig cfg;
  cfg.target_block_size = 1024;
  testing::write_csv_table(c->write_target(), "big", Schema::parse("k:int64,v:int64"), big, cfg);
  testing::write_csv_table(c->write_target(), "small", Schema::parse("k2:int64,w:int64"), small, cfg);
  const auto r = c->query("SELECT count(*), sum(w) FROM big JOIN small ON k = k2");
  ASSERT_EQ(r.result.rows.size(), 1u);
  // 10 keys match, 12 big rows each.
  EXPECT_EQ(r.result.rows[0][0], Value(std::int64_t{120}));
  std::int64_t expect = 0;
  for (int k = 0; k < 50; k += 5) expect += 12 * k * 10;
  EXPECT_EQ(r.result.rows[0][1], Value(expect));
  bool saw_build = false;
  for (const auto& f : r.report.fragments) saw_build |= f.phase == "build";
  EXPECT_TRUE(saw_build);
}

}  // namespace
}  // namespace rawdb
