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
#include <string>
#include <vector>

#include "rawdb/block_store.h"
#include "rawdb/executor.h"
#include "rawdb/scan.h"

namespace rawdb {

struct FragmentReport {
  // "scan", or "build" for the first phase of a join.
  std::string phase = "scan";
  std::string table;
  std::uint32_t fragment_id = 0;
  std::uint32_t ordinal = 0;
  // Node whose answer was used.
  NodeId node = 0;
  double latency_ms = 0;
  // Dispatches beyond the first, whether after a failure or a timeout.
  std::uint32_t retries = 0;
  bool hedged = false;
  AccessPath access = AccessPath::kFull;
  bool pm_used = false;
  ScanCounters counters;

  bool operator==(const FragmentReport&) const = default;
};

struct QueryReport {
  std::string query_id;
  double latency_ms = 0;
  std::uint32_t retries = 0;
  std::uint32_t hedges = 0;
  std::uint32_t duplicates_dropped = 0;
  ScanCounters counters;
  std::vector<FragmentReport> fragments;
  std::vector<std::string> plan;

  bool operator==(const QueryReport&) const = default;
};

struct QueryResponse {
  ResultSet result;
  QueryReport report;

  bool operator==(const QueryResponse&) const = default;
};

}  // namespace rawdb
