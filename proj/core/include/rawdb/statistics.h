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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rawdb/hll.h"

namespace rawdb {

struct AttrSketch {
  std::uint32_t attr = 0;
  HllSketch sketch;

  bool operator==(const AttrSketch&) const = default;
};

struct TableStatistics {
  std::uint64_t record_count = 0;
  // Ascending by attr.
  std::vector<AttrSketch> attrs;

  const HllSketch* sketch_for(std::uint32_t attr) const;
  std::optional<double> distinct_estimate(std::uint32_t attr) const;

  bool operator==(const TableStatistics&) const = default;
};

// Sums record counts and merges sketches. Throws on an empty list or when the
// tracked attribute sets or precisions differ.
TableStatistics stats_merge(std::span<const TableStatistics> parts);

// "DNST" u16 version=1 u64 record_count u32 attr_count, then per attribute
// u32 attr, u8 p, 2^p register bytes.
std::string encode_stats(const TableStatistics& stats);
TableStatistics decode_stats(std::string_view bytes);

}  // namespace rawdb
