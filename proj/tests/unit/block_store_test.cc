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

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "rawdb/error.h"
#include "test_support.h"

namespace rawdb {
namespace {

using testing::TempDir;

BlockMeta meta_for(std::string table, std::uint32_t ordinal, std::string_view bytes,
                   std::vector<Replica> replicas, BlockKind kind = BlockKind::kData) {
  BlockMeta m;
  m.id = {std::move(table), kind, ordinal};
  m.length = bytes.size();
  m.checksum = block_checksum(bytes);
  m.replicas = std::move(replicas);
  return m;
}

TEST(BlockId, NamesAndSiblings) {
  BlockId id{"t", BlockKind::kData, 3};
  EXPECT_EQ(id.file_name(), "data.3.blk");
  EXPECT_EQ(id.to_string(), "t/data.3");
  EXPECT_EQ(id.sibling(BlockKind::kPm), (BlockId{"t", BlockKind::kPm, 3}));
  for (auto k : {BlockKind::kData, BlockKind::kPm, BlockKind::kVi, BlockKind::kStats}) {
    EXPECT_EQ(parse_block_kind(block_kind_name(k)), k);
  }
}

TEST(ReplicationPolicy, FollowersFormARing) {
  ReplicationPolicy p(3, 5);
  EXPECT_EQ(p.followers(0), (std::vector<NodeId>{1, 2}));
  EXPECT_EQ(p.followers(4), (std::vector<NodeId>{0, 1}));
  ReplicationPolicy single(1, 4);
  EXPECT_TRUE(single.followers(2).empty());
}

TEST(ReplicationPolicy, ClampsFactorToClusterSize) {
  EXPECT_EQ(ReplicationPolicy(4, 3).followers(1), (std::vector<NodeId>{2, 0}));
  EXPECT_THROW(ReplicationPolicy(0, 3), Error);
  EXPECT_THROW(ReplicationPolicy(1, 0), Error);
}

TEST(PlaceReplicas, PrimaryInMemoryFollowersOnDisk) {
  ReplicationPolicy p(3, 4);
  const std::vector<NodeId> live{0, 1, 2, 3};
  auto m = place_replicas(BlockMeta{}, p, 2, live);
  ASSERT_EQ(m.replicas.size(), 3u);
  EXPECT_EQ(m.replicas[0], (Replica{2, StorageTier::kMemory}));
  EXPECT_EQ(m.replicas[1], (Replica{3, StorageTier::kDisk}));
  EXPECT_EQ(m.replicas[2], (Replica{0, StorageTier::kDisk}));
  EXPECT_FALSE(m.under_replicated);
}

TEST(PlaceReplicas, SkipsDeadFollowersAndFlagsShortfall) {
  ReplicationPolicy p(3, 4);
  const std::vector<NodeId> live{0, 1, 3};
  auto m = place_replicas(BlockMeta{}, p, 1, live);
  EXPECT_EQ(m.replica_nodes(), (std::vector<NodeId>{1, 3, 0}));
  EXPECT_FALSE(m.under_replicated);

  const std::vector<NodeId> two{0, 1};
  auto short_m = place_replicas(BlockMeta{}, p, 0, two);
  EXPECT_EQ(short_m.replica_nodes(), (std::vector<NodeId>{0, 1}));
  EXPECT_TRUE(short_m.under_replicated);
}

// Property: for any cluster, factor and live set, every block placed with the
// same primary gets the same replica list, so metadata placed alongside data
// always shares nodes.
TEST(PlaceReplicas, SamePrimaryAlwaysSameNodes) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::uint32_t n = 1 + rng() % 8;
    const std::uint32_t f = 1 + rng() % n;
    std::vector<NodeId> live;
    for (NodeId i = 0; i < n; ++i) {
      if (rng() % 4 != 0) live.push_back(i);
    }
    if (live.empty()) live.push_back(0);
    ReplicationPolicy p(f, n);
    const NodeId primary = live[rng() % live.size()];
    auto a = place_replicas(BlockMeta{}, p, primary, live);
    auto b = place_replicas(BlockMeta{{"t", BlockKind::kVi, 9}}, p, primary, live);
    EXPECT_EQ(a.replicas, b.replicas);
    EXPECT_EQ(a.replicas.front().node, primary);
    const auto nodes = a.replica_nodes();
    std::set<NodeId> distinct(nodes.begin(), nodes.end());
    EXPECT_EQ(distinct.size(), a.replicas.size());
    EXPECT_EQ(a.replicas.size(), std::min<std::size_t>(f, live.size()));
    for (auto node : nodes) {
      EXPECT_TRUE(std::find(live.begin(), live.end(), node) != live.end());
    }
  }
}

TEST(ColocateWith, CopiesReplicaList) {
  ReplicationPolicy p(2, 3);
  const std::vector<NodeId> live{0, 1, 2};
  auto data = place_replicas(meta_for("t", 0, "x\n", {}), p, 1, live);
  auto pm = colocate_with(meta_for("t", 0, "pm", {}, BlockKind::kPm), data);
  EXPECT_EQ(pm.replicas, data.replicas);
  EXPECT_EQ(pm.id.kind, BlockKind::kPm);
}

TEST(SplitRecords, NeverSplitsARecord) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::string csv = testing::random_int_csv(rng, 1 + rng() % 200, 1 + rng() % 12);
    const std::uint64_t target = 120 + rng() % 2000;
    const auto ranges = split_records(csv, target);
    std::size_t expect_begin = 0;
    for (const auto& [b, e] : ranges) {
      EXPECT_EQ(b, expect_begin);
      EXPECT_LE(e - b, target);
      EXPECT_EQ(csv[e - 1], '\n');
      expect_begin = e;
    }
    EXPECT_EQ(expect_begin, csv.size());
  }
}

TEST(SplitRecords, RejectsMalformedStreams) {
  EXPECT_THROW(split_records("1,2\n3,4", 100), Error);
  EXPECT_THROW(split_records("1,2\r\n", 100), Error);
  EXPECT_THROW(split_records("123456789\n", 4), Error);
  EXPECT_TRUE(split_records("", 10).empty());
}

TEST(NodeStore, PutGetAndTiers) {
  TempDir dir;
  NodeStore node(0, dir.path());
  const std::string bytes = "1,2,3\n4,5,6\n";
  auto mem = meta_for("t", 0, bytes, {{0, StorageTier::kMemory}});
  auto disk = meta_for("t", 1, bytes, {{0, StorageTier::kDisk}});
  node.put(mem.id, StorageTier::kMemory, bytes);
  node.put(disk.id, StorageTier::kDisk, bytes);
  EXPECT_EQ(*node.get(mem), bytes);
  EXPECT_EQ(*node.get(disk), bytes);
  EXPECT_EQ(node.read(disk, ByteRange{2, 5}), "2,3");
  EXPECT_TRUE(node.holds(mem.id));
  EXPECT_EQ(node.used_bytes(), 2 * bytes.size());
  node.remove(mem.id);
  EXPECT_FALSE(node.holds(mem.id));
  EXPECT_EQ(node.used_bytes(), bytes.size());
}

TEST(NodeStore, MissingReplicaIsNotHere) {
  TempDir dir;
  NodeStore node(1, dir.path());
  auto m = meta_for("t", 0, "a\n", {{1, StorageTier::kDisk}});
  try {
    node.get(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotHere);
  }
}

TEST(NodeStore, DetectsCorruptReplica) {
  TempDir dir;
  NodeStore node(0, dir.path());
  const std::string bytes = "10,20\n30,40\n";
  auto m = meta_for("t", 0, bytes, {{0, StorageTier::kDisk}});
  node.put(m.id, StorageTier::kDisk, bytes);
  {
    std::fstream f(node.path_for(m.id, StorageTier::kDisk), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(1);
    f.put('9');
  }
  try {
    node.get(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorruption);
  }
}

TEST(NodeStore, CapacityIsEnforced) {
  TempDir dir;
  NodeStore node(0, dir.path(), NodeStoreOptions{16});
  node.put({"t", BlockKind::kData, 0}, StorageTier::kDisk, "0123456789");
  try {
    node.put({"t", BlockKind::kData, 1}, StorageTier::kDisk, "0123456789");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStorageFull);
  }
  EXPECT_EQ(node.used_bytes(), 10u);
}

TEST(NodeStore, ReopenFindsPersistedReplicas) {
  TempDir dir;
  const std::string bytes = "7,8\n";
  auto m = meta_for("t", 0, bytes, {{0, StorageTier::kMemory}});
  {
    NodeStore node(0, dir.path());
    node.put(m.id, StorageTier::kMemory, bytes);
  }
  NodeStore again(0, dir.path());
  EXPECT_TRUE(again.holds(m.id));
  EXPECT_EQ(*again.get(m), bytes);
}

TEST(BlockStore, SplitAndStoreCoversStream) {
  TempDir dir;
  BlockStore store(dir.path(), 3);
  std::mt19937_64 rng(9);
  const std::string csv = testing::random_int_csv(rng, 500, 6);
  ReplicationPolicy p(2, 3);
  const std::vector<NodeId> live{0, 1, 2};
  auto blocks = store.split_and_store("t", BlockKind::kData, csv, 1024, p, live);
  ASSERT_GT(blocks.size(), 3u);
  std::string joined;
  std::uint64_t records = 0;
  for (std::size_t d = 0; d < blocks.size(); ++d) {
    EXPECT_EQ(blocks[d].id.ordinal, d);
    EXPECT_EQ(blocks[d].replicas.front().node, live[d % live.size()]);
    records += blocks[d].record_count;
    for (auto node : blocks[d].replica_nodes()) {
      EXPECT_EQ(store.read_block(blocks[d].id, node), store.read_block(blocks[d].id, blocks[d].replicas[0].node));
    }
    joined += store.read_block(blocks[d].id, blocks[d].replicas[0].node);
  }
  EXPECT_EQ(joined, csv);
  EXPECT_EQ(records, testing::split_lines(csv).size());
}

TEST(BlockStore, FailedStoreLeavesNothingBehind) {
  TempDir dir;
  BlockStore store(dir.path(), 2, NodeStoreOptions{4096});
  std::mt19937_64 rng(3);
  const std::string csv = testing::random_int_csv(rng, 400, 8);
  ASSERT_GT(csv.size(), 4096u);
  ReplicationPolicy p(1, 2);
  const std::vector<NodeId> live{0, 1};
  EXPECT_THROW(store.split_and_store("t", BlockKind::kData, csv, 1024, p, live), Error);
  EXPECT_EQ(store.node(0).used_bytes(), 0u);
  EXPECT_EQ(store.node(1).used_bytes(), 0u);
  EXPECT_FALSE(store.lookup({"t", BlockKind::kData, 0}));
}

TEST(BlockStore, RemoveDataBlockTakesSiblings) {
  TempDir dir;
  BlockStore store(dir.path(), 1);
  auto data = meta_for("t", 0, "1\n", {{0, StorageTier::kDisk}});
  auto pm = meta_for("t", 0, "pm", {{0, StorageTier::kDisk}}, BlockKind::kPm);
  store.store(data, "1\n");
  store.store(pm, "pm");
  store.remove_data_block(data.id);
  EXPECT_FALSE(store.node(0).holds(data.id));
  EXPECT_FALSE(store.node(0).holds(pm.id));
  EXPECT_FALSE(store.lookup(pm.id));
}

}  // namespace
}  // namespace rawdb
