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

#include "rawdb/bench.h"

#include <gtest/gtest.h>

#include <sstream>

#include "rawdb/cluster.h"
#include "rawdb/datagen.h"
#include "rawdb/error.h"
#include "test_support.h"

namespace rawdb {
namespace {

using testing::TempDir;

TEST(Datagen, DeterministicAndInRange) {
  std::ostringstream a, b, c;
  datagen(200, 7, 50, 11, a);
  datagen(200, 7, 50, 11, b);
  datagen(200, 7, 50, 12, c);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
  const auto lines = testing::split_lines(a.str());
  ASSERT_EQ(lines.size(), 200u);
  for (const auto& line : lines) {
    const auto fields = testing::split_row(line);
    ASSERT_EQ(fields.size(), 7u);
    for (const auto& f : fields) {
      const auto v = parse_int64(f);
      ASSERT_TRUE(v);
      EXPECT_GE(*v, 0);
      EXPECT_LT(*v, 50);
    }
  }
  const auto schema = generated_schema(7, 50);
  EXPECT_EQ(schema.size(), 7u);
  EXPECT_EQ(schema[6].name, "a6");
  EXPECT_EQ(schema[0].value_range, (std::pair<double, double>{0.0, 50.0}));
}

TEST(Datagen, IngestStoresTheSameBytes) {
  TempDir dir;
  BlockStore store(dir.path(), 2);
  std::ostringstream expected;
  datagen(1000, 5, 1000, 3, expected);
  DecoratorConfig config;
  config.pm = PmConfig::rate(2);
  config.target_block_size = 4096;
  const auto t = ingest_generated(WriteTarget{&store, 1, {0, 1}, nullptr}, "g", 1000, 5, 1000, 3, config);
  std::string joined;
  for (const auto& b : t.data_blocks) joined += store.read_block(b.id, b.replicas[0].node);
  EXPECT_EQ(joined, expected.str());
  EXPECT_EQ(t.record_count(), 1000u);
}

TEST(Bench, SelectivityConstant) {
  EXPECT_EQ(bench::selectivity_constant(1e-4, 1'000'000'000), 100'000u);
  EXPECT_EQ(bench::selectivity_constant(0.5, 10), 5u);
  EXPECT_EQ(bench::selectivity_constant(1.0, 10), 10u);
}

TEST(Bench, LinearFit) {
  const auto exact = bench::fit_linear({1, 2, 3}, {3, 5, 7});
  EXPECT_DOUBLE_EQ(exact.slope, 2.0);
  EXPECT_DOUBLE_EQ(exact.intercept, 1.0);
  EXPECT_DOUBLE_EQ(exact.r2, 1.0);
  // Worked by hand: Sxy = 3.5, Sxx = 5, SSres = 2.3, SStot = 4.75.
  const auto noisy = bench::fit_linear({1, 2, 3, 4}, {2, 4, 5, 4});
  EXPECT_NEAR(noisy.slope, 0.7, 1e-12);
  EXPECT_NEAR(noisy.intercept, 2.0, 1e-12);
  EXPECT_NEAR(noisy.r2, 1 - 2.3 / 4.75, 1e-12);
  EXPECT_THROW(bench::fit_linear({1}, {1}), Error);
}

TEST(Bench, WorkloadNames) {
  for (auto w : {bench::Workload::kRandomPm, bench::Workload::kKeyVi, bench::Workload::kBreakEven,
                 bench::Workload::kAttrScaling, bench::Workload::kSizeScaling, bench::Workload::kPmRateSweep,
                 bench::Workload::kTopK, bench::Workload::kJoin}) {
    EXPECT_EQ(bench::parse_workload(bench::workload_name(w)), w);
  }
  EXPECT_THROW(bench::parse_workload("nope"), Error);
}

class BenchRun : public ::testing::TestWithParam<bench::Workload> {};

// Every workload runs end to end at toy scale with the correctness gate on.
TEST_P(BenchRun, SmallScale) {
  TempDir dir;
  LocalCluster cluster(dir.path());
  bench::LocalBenchTarget target(cluster);
  bench::BenchSpec spec;
  spec.workload = GetParam();
  spec.queries = 3;
  spec.rows = 2000;
  spec.attrs = 12;
  spec.max_value = 100000;
  spec.selectivity = 0.01;
  spec.block_size = 16384;
  spec.scales = spec.workload == bench::Workload::kAttrScaling ? std::vector<std::uint64_t>{6, 12}
                                                                : std::vector<std::uint64_t>{1000, 2000};
  spec.selectivities = {0.001, 0.5};
  const auto report = bench::run_bench(spec, target);
  EXPECT_FALSE(report.records.empty());
  EXPECT_FALSE(report.summaries.empty());
  EXPECT_GT(report.oracle_checks, 0u);
  for (const auto& s : report.summaries) EXPECT_EQ(&report.summary(s.config), &s);
  EXPECT_THROW(report.summary("missing"), Error);

  std::ostringstream csv;
  bench::write_csv(report, csv);
  const auto lines = testing::split_lines(csv.str());
  ASSERT_EQ(lines.size(), report.records.size() + 1);
  EXPECT_EQ(lines[0],
            "workload,config,query,attrs,rows,latency_ms,retries,result_rows,rows_examined,rows_emitted,"
            "bytes_located,conversions,pm_hits,pm_misses,parse_errors,access");
  EXPECT_TRUE(cluster.catalog().tables().empty());
}

INSTANTIATE_TEST_SUITE_P(Workloads, BenchRun,
                         ::testing::Values(bench::Workload::kRandomPm, bench::Workload::kKeyVi,
                                           bench::Workload::kBreakEven, bench::Workload::kAttrScaling,
                                           bench::Workload::kSizeScaling, bench::Workload::kPmRateSweep,
                                           bench::Workload::kTopK, bench::Workload::kJoin),
                         [](const auto& info) { return std::string(bench::workload_name(info.param)); });

}  // namespace
}  // namespace rawdb
