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

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rawdb/cluster.h"
#include "rawdb/datagen.h"
#include "rawdb/decorators.h"
#include "rawdb/planner.h"
#include "rawdb/report.h"

namespace rawdb::bench {

enum class Workload : std::uint8_t {
  kRandomPm,
  kKeyVi,
  kBreakEven,
  kAttrScaling,
  kSizeScaling,
  kPmRateSweep,
  kTopK,
  kJoin,
};

std::string_view workload_name(Workload workload);
// Throws kInvalidArgument.
Workload parse_workload(std::string_view name);

struct BenchSpec {
  Workload workload = Workload::kRandomPm;
  std::uint32_t queries = 50;
  std::uint64_t rows = 100000;
  std::uint32_t attrs = 150;
  std::uint64_t max_value = kDefaultMaxValue;
  double selectivity = 1e-4;
  // "none", "0", "1/k"; empty selects the workload's default.
  std::vector<std::string> pm_rates;
  std::uint64_t seed = 42;
  std::uint64_t block_size = kDefaultBlockSize;
  std::uint32_t key_attr = 0;
  // attr_scaling: arities. size_scaling: row counts. Empty selects defaults.
  std::vector<std::uint64_t> scales;
  // break_even selectivities; empty selects defaults.
  std::vector<double> selectivities;
  // Compare every configuration against the no-metadata path before
  // reporting numbers.
  bool oracle_gate = true;
  bool keep_tables = false;
};

struct QueryRecord {
  std::string config;
  std::uint32_t index = 0;
  std::string sql;
  std::uint32_t attrs = 0;
  std::uint64_t rows = 0;
  double latency_ms = 0;
  std::uint32_t retries = 0;
  std::uint64_t result_rows = 0;
  ScanCounters counters;
  // "full", "index" or "mixed" across fragments.
  std::string access;
};

struct ConfigSummary {
  std::string config;
  std::uint32_t queries = 0;
  std::uint32_t attrs = 0;
  std::uint64_t rows = 0;
  std::uint64_t dataset_bytes = 0;
  std::uint64_t pm_bytes = 0;
  double total_ms = 0;
  double mean_ms = 0;
  double median_ms = 0;
  ScanCounters counters;
};

struct BenchReport {
  BenchSpec spec;
  std::vector<QueryRecord> records;
  std::vector<ConfigSummary> summaries;
  // Query results checked against the no-metadata path.
  std::uint64_t oracle_checks = 0;

  // Throws kNotFound.
  const ConfigSummary& summary(std::string_view config) const;
};

// Where bench tables are created and queried.
class BenchTarget {
 public:
  virtual ~BenchTarget() = default;
  virtual TableDescriptor create_table(const std::string& name, std::uint64_t rows, std::uint32_t attrs,
                                       std::uint64_t max_value, std::uint64_t seed,
                                       const DecoratorConfig& config) = 0;
  virtual void drop_table(const std::string& name) = 0;
  virtual QueryResponse query(const std::string& sql, const QueryOptions& options) = 0;
};

class LocalBenchTarget : public BenchTarget {
 public:
  explicit LocalBenchTarget(LocalCluster& cluster) : cluster_(cluster) {}
  TableDescriptor create_table(const std::string& name, std::uint64_t rows, std::uint32_t attrs,
                               std::uint64_t max_value, std::uint64_t seed,
                               const DecoratorConfig& config) override;
  void drop_table(const std::string& name) override;
  QueryResponse query(const std::string& sql, const QueryOptions& options) override;

 private:
  LocalCluster& cluster_;
};

// Blocks are written into a shared block root; the catalog lives behind a
// remote coordinator.
class RemoteBenchTarget : public BenchTarget {
 public:
  RemoteBenchTarget(std::string coordinator_url, std::filesystem::path root, std::uint32_t replication);
  TableDescriptor create_table(const std::string& name, std::uint64_t rows, std::uint32_t attrs,
                               std::uint64_t max_value, std::uint64_t seed,
                               const DecoratorConfig& config) override;
  void drop_table(const std::string& name) override;
  QueryResponse query(const std::string& sql, const QueryOptions& options) override;

 private:
  CoordinatorClient client_;
  std::filesystem::path root_;
  std::uint32_t replication_;
  std::unique_ptr<BlockStore> store_;
  std::vector<TableDescriptor> created_;
};

// PM and learned positions off, full scans only.
QueryOptions no_metadata_options();

// Predicate constant for a target selectivity over uniform [0, max_value).
std::uint64_t selectivity_constant(double selectivity, std::uint64_t max_value);

BenchReport run_bench(const BenchSpec& spec, BenchTarget& target,
                      const std::function<void(const std::string&)>& progress = {});

// One line per query; columns documented in the README.
void write_csv(const BenchReport& report, std::ostream& out);
void write_summary(const BenchReport& report, std::ostream& out);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rawdb::bench
