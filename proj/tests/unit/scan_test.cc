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

#include "rawdb/scan.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "rawdb/error.h"
#include "test_support.h"

namespace rawdb {
namespace {

using testing::naive_offsets;
using testing::split_lines;
using testing::split_row;

PositionalMap build_pm(std::string_view block, std::uint32_t arity,
                       std::vector<std::uint32_t> sampled) {
  PositionalMap pm(arity, sampled);
  for (const auto& line : split_lines(block)) {
    auto all = naive_offsets(line);
    std::vector<std::uint32_t> offs;
    for (auto a : sampled) offs.push_back(all[a]);
    pm.append(offs, static_cast<std::uint32_t>(line.size()));
  }
  return pm;
}

std::vector<std::uint32_t> every(std::uint32_t k, std::uint32_t arity) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t a = 0; k && a < arity; a += k) out.push_back(a);
  return out;
}

struct Emitted {
  std::uint64_t record;
  std::vector<Value> values;
  bool operator==(const Emitted&) const = default;
};

std::vector<Emitted> run(BlockScanner& scanner, const ScanRequest& req, ScanCounters* counters,
                         const VerticalIndex* vi = nullptr) {
  std::vector<Emitted> out;
  auto sink = [&](ScanRow&& r) {
    out.push_back({r.record, std::move(r.values)});
    return true;
  };
  *counters = vi ? scanner.index_scan(req, *vi, sink) : scanner.full_scan(req, sink);
  return out;
}

// Filters and projects with the reference tokenizer.
std::vector<Emitted> oracle(std::string_view block, const Schema& schema, const ScanRequest& req) {
  std::vector<Emitted> out;
  auto lines = split_lines(block);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto fields = split_row(lines[i]);
    bool ok = true;
    for (const auto& c : req.predicate) {
      auto v = parse_value(fields[c.attr], schema[c.attr].type);
      if (!v || !evaluate(c.op, *v, c.literal)) ok = false;
    }
    if (!ok) continue;
    Emitted e{i, {}};
    for (auto a : req.projection) {
      auto v = parse_value(fields[a], schema[a].type);
      if (!v) {
        ok = false;
        break;
      }
      e.values.push_back(*v);
    }
    if (ok) out.push_back(std::move(e));
  }
  return out;
}

TEST(LocateAttr, WalksForwardFromRowStart) {
  std::uint64_t bytes = 0;
  EXPECT_EQ(locate_attr("10,274,xyz", 3, 2, {}, &bytes), 7u);
  EXPECT_EQ(bytes, 7u);
  EXPECT_EQ(locate_attr("10,274,xyz", 3, 0, {}), 0u);
}

TEST(LocateAttr, UsesNearestAnchor) {
  std::vector<Anchor> anchors{{1, 3}};
  std::uint64_t bytes = 0;
  EXPECT_EQ(locate_attr("10,274,xyz", 3, 2, anchors, &bytes), 7u);
  EXPECT_EQ(bytes, 4u);
}

TEST(LocateAttr, WalksBackwardWhenStrictlyNearer) {
  // a,bb,ccc,dddd : starts 0 2 5 9
  std::vector<Anchor> anchors{{3, 9}};
  std::uint64_t bytes = 0;
  EXPECT_EQ(locate_attr("a,bb,ccc,dddd", 4, 2, anchors, &bytes), 5u);
  EXPECT_EQ(bytes, 4u);
  bytes = 0;
  // Attr 1 is equidistant from 0 and 3's neighbour; a tie prefers forward.
  std::vector<Anchor> tie{{2, 5}};
  EXPECT_EQ(locate_attr("a,bb,ccc,dddd", 4, 1, tie, &bytes), 2u);
  EXPECT_EQ(bytes, 2u);
}

TEST(LocateAttr, BackwardToFirstAttribute) {
  std::vector<Anchor> anchors{{1, 1}};
  EXPECT_EQ(locate_attr(",x,y", 3, 0, anchors), 0u);
  std::vector<Anchor> a2{{2, 3}};
  EXPECT_EQ(locate_attr(",x,y", 3, 1, a2), 1u);
}

TEST(LocateAttr, RejectsShortRowsAndBadTargets) {
  EXPECT_THROW(locate_attr("1,2", 3, 2, {}), Error);
  EXPECT_THROW(locate_attr("1,2,3", 3, 3, {}), Error);
}

TEST(LocateAttr, MatchesNaiveOffsetsOnRandomRows) {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 2000; ++iter) {
    const std::uint32_t arity = 1 + rng() % 60;
    std::string row;
    for (std::uint32_t a = 0; a < arity; ++a) {
      if (a) row.push_back(',');
      row.append(rng() % 25, 'x');
    }
    auto offs = naive_offsets(row);
    std::vector<Anchor> anchors;
    for (std::uint32_t a = 0; a < arity; ++a) {
      if (rng() % 5 == 0) anchors.push_back({a, offs[a]});
    }
    const std::uint32_t target = static_cast<std::uint32_t>(rng() % arity);
    ASSERT_EQ(locate_attr(row, arity, target, anchors), offs[target]) << row;
  }
}

class ScanOracleTest : public ::testing::TestWithParam<int> {};

// -1 no PM, 0 row lengths only, k > 0 rate 1/k
TEST_P(ScanOracleTest, FullScanMatchesOracle) {
  const int rate = GetParam();
  std::mt19937_64 rng(100 + rate);
  const std::uint32_t arity = 23;
  const Schema schema = Schema::uniform_int(arity);
  const std::string block = testing::random_int_csv(rng, 400, arity, -50, 50);
  std::optional<PositionalMap> pm;
  if (rate >= 0) pm = build_pm(block, arity, every(static_cast<std::uint32_t>(rate), arity));

  for (int q = 0; q < 40; ++q) {
    ScanRequest req;
    const int preds = static_cast<int>(rng() % 3);
    for (int p = 0; p < preds; ++p) {
      req.predicate.push_back({static_cast<std::uint32_t>(rng() % arity),
                               static_cast<CompareOp>(rng() % 6),
                               Value{static_cast<std::int64_t>(rng() % 101) - 50}});
    }
    const int proj = 1 + static_cast<int>(rng() % 4);
    for (int p = 0; p < proj; ++p) req.projection.push_back(static_cast<std::uint32_t>(rng() % arity));

    BlockScanner scanner(schema, block, 400, pm ? &*pm : nullptr, nullptr);
    ScanCounters c;
    auto got = run(scanner, req, &c);
    ASSERT_EQ(got, oracle(block, schema, req)) << "query " << q;
    EXPECT_EQ(c.rows_examined, 400u);
    EXPECT_EQ(c.rows_emitted, got.size());
    EXPECT_EQ(c.conversions, got.size() * req.projection.size());
    EXPECT_EQ(c.parse_errors, 0u);
  }
}

INSTANTIATE_TEST_SUITE_P(PmRates, ScanOracleTest, ::testing::Values(-1, 0, 1, 2, 5, 10));

TEST(BlockScanner, IndexScanMatchesFullScan) {
  std::mt19937_64 rng(3);
  const std::uint32_t arity = 12;
  const Schema schema = Schema::uniform_int(arity);
  const std::string block = testing::random_int_csv(rng, 500, arity, 0, 99);
  const auto pm = build_pm(block, arity, every(4, arity));
  VerticalIndex vi(5, KeyType::kInt64);
  std::uint64_t start = 0;
  for (const auto& line : split_lines(block)) {
    vi.append_int(*parse_int64(split_row(line)[5]), start);
    start += line.size() + 1;
  }
  for (int q = 0; q < 30; ++q) {
    ScanRequest req;
    req.projection = {0, 5, 11};
    req.predicate.push_back({5, static_cast<CompareOp>(rng() % 6),
                             Value{static_cast<std::int64_t>(rng() % 100)}});
    if (q % 2) req.predicate.push_back({7, CompareOp::kGe, Value{std::int64_t{50}}});
    for (const PositionalMap* p : {&pm, static_cast<const PositionalMap*>(nullptr)}) {
      BlockScanner scanner(schema, block, 500, p, nullptr);
      ScanCounters full, idx;
      auto a = run(scanner, req, &full);
      auto b = run(scanner, req, &idx, &vi);
      ASSERT_EQ(a, b);
      EXPECT_LE(idx.rows_examined, full.rows_examined);
    }
  }
}

TEST(BlockScanner, StackedKeyComparisonsMatchOracle) {
  std::mt19937_64 rng(31);
  const Schema schema = Schema::uniform_int(3);
  constexpr std::int64_t kEdges[] = {INT64_MIN, INT64_MIN + 1, -1, 0, 1, INT64_MAX - 1, INT64_MAX};
  auto pick = [&]() -> std::int64_t {
    return rng() % 3 == 0 ? kEdges[rng() % std::size(kEdges)] : static_cast<std::int64_t>(rng() % 21) - 10;
  };
  std::string block;
  VerticalIndex vi(1, KeyType::kInt64);
  for (int r = 0; r < 400; ++r) {
    const std::int64_t key = pick();
    vi.append_int(key, block.size());
    block += fmt::format("{},{},{}\n", r, key, r % 7);
  }
  for (int q = 0; q < 300; ++q) {
    ScanRequest req;
    req.projection = {0, 1};
    for (int c = 0, n = 1 + static_cast<int>(rng() % 3); c < n; ++c) {
      const auto op = static_cast<CompareOp>(rng() % 6);
      const Value lit = rng() % 5 == 0 ? Value{static_cast<double>(pick()) + 0.5} : Value{pick()};
      req.predicate.push_back({1, op, lit});
    }
    BlockScanner scanner(schema, block, 400, nullptr, nullptr);
    ScanCounters counters;
    ASSERT_EQ(run(scanner, req, &counters, &vi), oracle(block, schema, req)) << "query " << q;
  }
}

TEST(BlockScanner, IndexCountMismatchIsInconsistency) {
  const Schema schema = Schema::uniform_int(2);
  const std::string block = "1,2\n3,4\n";
  VerticalIndex vi(0, KeyType::kInt64);
  vi.append_int(1, 0);
  BlockScanner scanner(schema, block, 2, nullptr, nullptr);
  ScanRequest req;
  req.projection = {1};
  try {
    scanner.index_scan(req, vi, [](ScanRow&&) { return true; });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMetadataInconsistency);
  }
}

TEST(BlockScanner, ConversionFailuresAreSkippedAndCounted) {
  const Schema schema = Schema::uniform_int(3);
  const std::string block = "1,2,3\n4,x,6\n7,8,9\n";
  BlockScanner scanner(schema, block, 3, nullptr, nullptr);
  ScanRequest req;
  req.projection = {0, 1};
  ScanCounters c;
  auto got = run(scanner, req, &c);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[1].record, 2u);
  EXPECT_EQ(c.parse_errors, 1u);
}

TEST(BlockScanner, MixedTypes) {
  const Schema schema = Schema::parse("id:int64,price:float64,name:text");
  const std::string block = "1,2.5,apple\n2,nan,pear\n3,-1e3,fig\n";
  BlockScanner scanner(schema, block, 3, nullptr, nullptr);
  ScanRequest req;
  req.projection = {2, 0};
  req.predicate = {{1, CompareOp::kLt, Value{3.0}}};
  ScanCounters c;
  auto got = run(scanner, req, &c);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].values[0], Value{std::string("apple")});
  EXPECT_EQ(got[1].values[1], Value{std::int64_t{3}});
  req.predicate = {{2, CompareOp::kEq, Value{std::string("pear")}}};
  got = run(scanner, req, &c);
  ASSERT_EQ(got.size(), 1u);
  req.predicate = {{2, CompareOp::kEq, Value{std::int64_t{1}}}};
  EXPECT_THROW(run(scanner, req, &c), Error);
}

TEST(BlockScanner, LimitStopsEarly) {
  std::mt19937_64 rng(1);
  const Schema schema = Schema::uniform_int(4);
  const std::string block = testing::random_int_csv(rng, 100, 4);
  BlockScanner scanner(schema, block, 100, nullptr, nullptr);
  ScanRequest req;
  req.projection = {1};
  req.limit = 7;
  ScanCounters c;
  EXPECT_EQ(run(scanner, req, &c).size(), 7u);
  EXPECT_EQ(c.rows_examined, 7u);
}

TEST(BlockScanner, MismatchedPmIsIgnored) {
  const Schema schema = Schema::uniform_int(2);
  const std::string block = "1,2\n3,4\n";
  PositionalMap pm(2, {0});
  pm.append(std::vector<std::uint32_t>{0}, 3);
  BlockScanner scanner(schema, block, 2, &pm, nullptr);
  EXPECT_FALSE(scanner.has_pm());
  ScanRequest req;
  req.projection = {1};
  ScanCounters c;
  EXPECT_EQ(run(scanner, req, &c).size(), 2u);
}

// Adding anchors never increases navigation work: none >= rate 0 >= 1/k >= 1/1
// whenever the sampled sets are nested.
TEST(BlockScanner, BytesLocatedShrinkWithNestedAnchorSets) {
  std::mt19937_64 rng(11);
  const std::uint32_t arity = 60;
  const Schema schema = Schema::uniform_int(arity);
  const std::string block = testing::random_int_csv(rng, 300, arity);
  const auto pm0 = build_pm(block, arity, {});
  const auto pm6 = build_pm(block, arity, every(6, arity));
  const auto pm3 = build_pm(block, arity, every(3, arity));
  const auto pm1 = build_pm(block, arity, every(1, arity));
  for (int q = 0; q < 50; ++q) {
    ScanRequest req;
    req.projection = {static_cast<std::uint32_t>(rng() % arity)};
    req.predicate = {{static_cast<std::uint32_t>(rng() % arity), CompareOp::kLt,
                      Value{std::int64_t{500000000}}}};
    std::vector<std::uint64_t> bytes;
    for (const PositionalMap* p : {static_cast<const PositionalMap*>(nullptr), &pm0, &pm6, &pm3, &pm1}) {
      BlockScanner scanner(schema, block, 300, p, nullptr);
      ScanCounters c;
      run(scanner, req, &c);
      bytes.push_back(c.bytes_located);
    }
    for (std::size_t i = 1; i < bytes.size(); ++i) {
      EXPECT_GE(bytes[i - 1], bytes[i]) << "query " << q << " step " << i;
    }
    EXPECT_EQ(bytes.back(), 0u);
  }
}

TEST(BlockScanner, LearnedPositionsSpeedUpRepeatQueries) {
  std::mt19937_64 rng(5);
  const std::uint32_t arity = 40;
  const Schema schema = Schema::uniform_int(arity);
  const std::string block = testing::random_int_csv(rng, 200, arity);
  LearnedPositions learned;
  ScanRequest req;
  req.projection = {17, 33};
  req.predicate = {{25, CompareOp::kGt, Value{std::int64_t{100}}}};
  ScanCounters first, second, third;
  BlockScanner s1(schema, block, 200, nullptr, &learned);
  auto a = run(s1, req, &first);
  ASSERT_TRUE(learned.row_starts());
  EXPECT_EQ(learned.row_starts()->size(), 201u);
  BlockScanner s2(schema, block, 200, nullptr, &learned);
  auto b = run(s2, req, &second);
  BlockScanner s3(schema, block, 200, nullptr, &learned);
  auto c = run(s3, req, &third);
  EXPECT_EQ(a, b);
  EXPECT_EQ(b, c);
  EXPECT_LT(second.bytes_located, first.bytes_located);
  EXPECT_EQ(third.bytes_located, 0u);
  EXPECT_EQ(third.pm_misses, 0u);
  ASSERT_TRUE(learned.column(25));
  EXPECT_TRUE(learned.column(25)->complete);
}

TEST(BlockScanner, LearningDisabledLeavesCacheEmpty) {
  const Schema schema = Schema::uniform_int(3);
  const std::string block = "1,2,3\n4,5,6\n";
  LearnedPositions learned;
  BlockScanner scanner(schema, block, 2, nullptr, &learned, ScanOptions{.learn = false});
  ScanRequest req;
  req.projection = {2};
  ScanCounters c;
  run(scanner, req, &c);
  EXPECT_FALSE(learned.row_starts());
  EXPECT_EQ(learned.bytes(), 0u);
}

TEST(Evaluate, NanNeverMatches) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int op = 0; op < 6; ++op) {
    EXPECT_FALSE(evaluate(static_cast<CompareOp>(op), Value{nan}, Value{1.0}));
  }
  EXPECT_TRUE(evaluate(CompareOp::kLt, Value{std::int64_t{1}}, Value{1.5}));
  EXPECT_TRUE(evaluate(CompareOp::kNe, Value{std::string("a")}, Value{std::string("b")}));
}

TEST(MetadataCache, DecodesOnceAndCachesAbsence) {
  MetadataCache cache;
  PositionalMap pm(2, {0});
  pm.append(std::vector<std::uint32_t>{0}, 3);
  const std::string bytes = encode_pm(pm);
  int loads = 0;
  BlockId id{"t", BlockKind::kPm, 0};
  for (int i = 0; i < 3; ++i) {
    auto got = cache.pm(id, 1, [&] {
      ++loads;
      return std::optional<std::string>(bytes);
    });
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, pm);
  }
  EXPECT_EQ(loads, 1);
  EXPECT_EQ(cache.decodes(), 1u);

  BlockId bad{"t", BlockKind::kPm, 1};
  for (int i = 0; i < 2; ++i) {
    EXPECT_FALSE(cache.pm(bad, 1, [&] {
      ++loads;
      return std::optional<std::string>("garbage");
    }));
  }
  EXPECT_EQ(loads, 2);
  EXPECT_EQ(cache.failures(), 1u);
}

}  // namespace
}  // namespace rawdb
