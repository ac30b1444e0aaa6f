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

#include "rawdb/wire.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "json.hpp"
#include "rawdb/cluster.h"
#include "rawdb/error.h"

namespace rawdb {
namespace {

using nlohmann::json;

Value random_value(std::mt19937_64& rng) {
  switch (rng() % 6) {
    case 0: return {};
    case 1: return static_cast<std::int64_t>(rng());
    case 2: return std::ldexp(static_cast<double>(rng() % 1000000) - 500000, static_cast<int>(rng() % 40) - 20);
    case 3: {
      const double specials[] = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                                 -0.0, 1e308, 5e-324};
      return specials[rng() % 5];
    }
    case 4: return std::string("text \"quoted\" \\ \n \xc3\xa9");
    default: return std::string(rng() % 5, 'x');
  }
}

std::vector<Value> random_row(std::mt19937_64& rng, std::size_t n) {
  std::vector<Value> row;
  for (std::size_t i = 0; i < n; ++i) row.push_back(random_value(rng));
  return row;
}

ScanCounters random_counters(std::mt19937_64& rng) {
  return {rng() % 1000, rng() % 1000, rng(), rng() % 99, rng() % 7, rng() % 7, rng() % 3};
}

BlockMeta random_meta(std::mt19937_64& rng, BlockKind kind) {
  BlockMeta m;
  m.id = {"tbl", kind, static_cast<std::uint32_t>(rng() % 100)};
  m.length = rng() % 100000;
  m.record_count = rng() % 1000;
  m.checksum = rng();
  m.replicas = {{static_cast<NodeId>(rng() % 4), StorageTier::kMemory}, {5, StorageTier::kDisk}};
  m.under_replicated = rng() % 2;
  return m;
}

TEST(Wire, FragmentRequestRoundTrip) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    FragmentRequest r;
    r.query_id = "q1-" + std::to_string(trial);
    r.fragment_id = static_cast<std::uint32_t>(rng() % 50);
    r.schema = Schema::parse("a,b:float64,c:text");
    r.schema[0].value_range = {{0.0, 1e9}};
    r.data_block = random_meta(rng, BlockKind::kData);
    if (rng() % 2) r.pm_block = random_meta(rng, BlockKind::kPm);
    if (rng() % 2) r.vi_block = random_meta(rng, BlockKind::kVi);
    r.scan.block = r.data_block.id;
    r.scan.projection = {2, 0};
    r.scan.predicate = {{0, CompareOp::kGe, Value(std::int64_t{-4})}, {1, CompareOp::kNe, Value(2.5)},
                        {2, CompareOp::kEq, Value(std::string("x"))}};
    r.scan.access = rng() % 2 ? AccessPath::kIndex : AccessPath::kFull;
    r.scan.index_attr = 1;
    if (rng() % 2) r.scan.limit = rng() % 10;
    r.op.kind = static_cast<FragmentKind>(rng() % 3);
    r.op.group_columns = {1};
    r.op.aggregates = {{AggFn::kCount, std::nullopt, AttrType::kInt64}, {AggFn::kCountDistinct, 0, AttrType::kText}};
    if (rng() % 2) r.op.sort = SortSpec{1, true};
    r.op.exact_distinct = rng() % 2;
    r.op.hll_precision = 10;
    if (rng() % 2) {
      JoinProbe j;
      j.probe_key = 0;
      j.build_key = 1;
      for (int i = 0; i < 5; ++i) j.build_rows.push_back(random_row(rng, 3));
      r.join = j;
    }
    r.use_pm = rng() % 2;
    r.learn_positions = rng() % 2;
    const auto back = wire::decode_fragment_request(wire::encode_fragment_request(r));
    EXPECT_EQ(back, r);
  }
}

TEST(Wire, PartialResultRoundTrip) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    PartialResult p;
    p.query_id = "q";
    p.fragment_id = 3;
    p.ordinal = 3;
    p.kind = static_cast<FragmentKind>(rng() % 3);
    for (int i = 0; i < 4; ++i) p.rows.push_back({{3, rng() % 100, static_cast<std::uint32_t>(rng() % 3)}, random_row(rng, 3)});
    GroupState g;
    g.key = random_row(rng, 2);
    AggState s;
    s.count = rng() % 100;
    s.int_sum = static_cast<std::int64_t>(rng());
    s.float_sum = 0.125;
    s.min = random_value(rng);
    s.max = random_value(rng);
    HllSketch sketch(8);
    sketch.insert("a");
    sketch.insert("b");
    s.sketch = sketch;
    s.distinct = {Value(std::int64_t{1}), Value(std::string("z"))};
    g.states = {s, AggState{}};
    p.groups.push_back(g);
    p.counters = random_counters(rng);
    p.access = AccessPath::kIndex;
    p.pm_used = true;
    EXPECT_EQ(wire::decode_partial_result(wire::encode_partial_result(p)), p);
  }
}

TEST(Wire, NanSurvivesAsTaggedFloat) {
  PartialResult p;
  p.rows.push_back({{0, 0, 0}, {Value(std::nan(""))}});
  const auto text = wire::encode_partial_result(p);
  EXPECT_NE(text.find(R"({"float":"nan"})"), std::string::npos);
  const auto back = wire::decode_partial_result(text);
  EXPECT_TRUE(std::isnan(std::get<double>(back.rows[0].values[0])));
}

TEST(Wire, IntegersStayIntegers) {
  QueryResponse r;
  r.result.columns = {"a", "b"};
  r.result.column_types = {AttrType::kInt64, AttrType::kFloat64};
  r.result.rows = {{Value(std::int64_t{INT64_MIN}), Value(3.0)}};
  const auto j = json::parse(wire::encode_query_response(r));
  EXPECT_TRUE(j["rows"][0][0].is_number_integer());
  EXPECT_EQ(j["rows"][0][0].get<std::int64_t>(), INT64_MIN);
  EXPECT_TRUE(j["rows"][0][1].is_number_float());
  const auto back = wire::decode_query_response(j.dump());
  EXPECT_EQ(back.result.rows[0][1], Value(3.0));
}

TEST(Wire, QueryResponseRoundTrip) {
  std::mt19937_64 rng(3);
  QueryResponse r;
  r.result.columns = {"x", "count(*)"};
  r.result.column_types = {AttrType::kText, AttrType::kInt64};
  for (int i = 0; i < 10; ++i) r.result.rows.push_back(random_row(rng, 2));
  r.result.approximate = true;
  r.report.query_id = "q5-1";
  r.report.latency_ms = 12.5;
  r.report.retries = 2;
  r.report.hedges = 1;
  r.report.duplicates_dropped = 1;
  r.report.counters = random_counters(rng);
  r.report.plan = {"line one", "line two"};
  FragmentReport f;
  f.phase = "build";
  f.table = "t";
  f.fragment_id = 4;
  f.ordinal = 4;
  f.node = 2;
  f.latency_ms = 0.25;
  f.retries = 1;
  f.hedged = true;
  f.access = AccessPath::kIndex;
  f.pm_used = true;
  f.counters = random_counters(rng);
  r.report.fragments = {f};
  EXPECT_EQ(wire::decode_query_response(wire::encode_query_response(r)), r);
}

TEST(Wire, QueryRequestCarriesOptions) {
  QueryOptions o;
  o.use_index = UseIndex::kOn;
  o.tau = 0.5;
  o.exact_distinct = true;
  o.use_pm = false;
  o.learn_positions = false;
  o.timeout_ms = 77;
  const auto [sql, back] = wire::decode_query_request(wire::encode_query_request("SELECT 1", o));
  EXPECT_EQ(sql, "SELECT 1");
  EXPECT_EQ(back, o);
  const auto [sql2, defaults] = wire::decode_query_request(R"({"sql": "x", "options": {"use_index": "off"}})");
  EXPECT_EQ(defaults.use_index, UseIndex::kOff);
  EXPECT_TRUE(defaults.use_pm);
}

TEST(Wire, NodesRoundTrip) {
  std::vector<NodeInfo> nodes(3);
  nodes[0] = {0, "http://127.0.0.1:1", NodeState::kLive, 10, 100, std::nullopt, 2};
  nodes[1] = {1, "inproc://1", NodeState::kSuspect, 20, 0, 1ULL << 40, 1};
  nodes[2] = {7, "http://h:9", NodeState::kDead, 0, 5, 4096, 8};
  EXPECT_EQ(wire::decode_nodes(wire::encode_nodes(nodes)), nodes);
}

TEST(Wire, ErrorsAndStatuses) {
  const auto e = wire::decode_error(wire::encode_error(ErrorCode::kNotHere, "block t/data.0 not here"));
  EXPECT_EQ(e.code(), ErrorCode::kNotHere);
  EXPECT_NE(std::string(e.what()).find("t/data.0"), std::string::npos);
  EXPECT_EQ(wire::decode_error("<html>").code(), ErrorCode::kInternal);

  EXPECT_EQ(wire::http_status(ErrorCode::kSyntax), 400);
  EXPECT_EQ(wire::http_status(ErrorCode::kPlan), 400);
  EXPECT_EQ(wire::http_status(ErrorCode::kDecode), 400);
  EXPECT_EQ(wire::http_status(ErrorCode::kNotFound), 404);
  EXPECT_EQ(wire::http_status(ErrorCode::kAlreadyExists), 409);
  EXPECT_EQ(wire::http_status(ErrorCode::kUnavailable), 503);
  EXPECT_EQ(wire::http_status(ErrorCode::kStorageFull), 507);
  EXPECT_EQ(wire::http_status(ErrorCode::kCorruption), 500);
}

TEST(Wire, MalformedInputIsDecodeError) {
  for (const char* bad : {"", "{", "[]", R"({"query_id": 5})", R"({"rows": "nope"})", "null"}) {
    try {
      wire::decode_partial_result(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDecode) << bad;
    }
  }
  EXPECT_THROW(wire::decode_fragment_request(R"({"schema": 1})"), Error);
  EXPECT_THROW(wire::decode_query_request(R"({"options": {}})"), Error);
}

TEST(Wire, TableJsonDescribesLayout) {
  TableDescriptor t;
  t.name = "t";
  t.schema = Schema::parse("a,b");
  BlockMeta d;
  d.id = {"t", BlockKind::kData, 0};
  d.record_count = 3;
  d.length = 12;
  d.replicas = {{1, StorageTier::kMemory}, {2, StorageTier::kDisk}};
  t.data_blocks = {d};
  auto pm = d;
  pm.id.kind = BlockKind::kPm;
  t.pm_blocks = {pm};
  t.key_attrs = {1};
  const auto j = json::parse(wire::encode_table(t));
  EXPECT_EQ(j["name"], "t");
  EXPECT_EQ(j["record_count"], 3);
  EXPECT_EQ(j["key_attrs"], json::array({"b"}));
  EXPECT_EQ(j["blocks"].size(), 1u);
  EXPECT_TRUE(j["has_pm"].get<bool>());
}

}  // namespace
}  // namespace rawdb
