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

#include "rawdb/statistics.h"

#include <fmt/format.h>

#include "rawdb/bytes.h"
#include "rawdb/error.h"

namespace rawdb {

namespace {

constexpr std::string_view kMagic = "DNST";
constexpr std::uint16_t kVersion = 1;

}  // namespace

const HllSketch* TableStatistics::sketch_for(std::uint32_t attr) const {
  for (const auto& a : attrs) {
    if (a.attr == attr) return &a.sketch;
  }
  return nullptr;
}

std::optional<double> TableStatistics::distinct_estimate(std::uint32_t attr) const {
  if (const auto* s = sketch_for(attr)) return s->estimate();
  return std::nullopt;
}

TableStatistics stats_merge(std::span<const TableStatistics> parts) {
  if (parts.empty()) throw_error(ErrorCode::kInvalidArgument, "cannot merge an empty list of statistics");
  TableStatistics out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.attrs.size() != out.attrs.size()) {
      throw_error(ErrorCode::kInvalidArgument, "statistics track different attribute sets");
    }
    out.record_count += p.record_count;
    for (std::size_t k = 0; k < out.attrs.size(); ++k) {
      if (p.attrs[k].attr != out.attrs[k].attr) {
        throw_error(ErrorCode::kInvalidArgument, "statistics track different attribute sets");
      }
      out.attrs[k].sketch.merge(p.attrs[k].sketch);
    }
  }
  return out;
}

std::string encode_stats(const TableStatistics& stats) {
  std::string out;
  ByteWriter w(out);
  w.magic(kMagic);
  w.u16(kVersion);
  w.u64(stats.record_count);
  w.u32(static_cast<std::uint32_t>(stats.attrs.size()));
  for (const auto& a : stats.attrs) {
    w.u32(a.attr);
    w.u8(a.sketch.precision());
    const auto& regs = a.sketch.registers();
    w.bytes(std::string_view(reinterpret_cast<const char*>(regs.data()), regs.size()));
  }
  return out;
}

TableStatistics decode_stats(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kMagic);
  const std::size_t version_at = r.offset();
  if (r.u16() != kVersion) throw DecodeError(version_at, "unsupported statistics version");
  TableStatistics stats;
  stats.record_count = r.u64();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    const std::uint32_t attr = r.u32();
    if (!stats.attrs.empty() && attr <= stats.attrs.back().attr) {
      throw DecodeError(at, "statistics attributes must be ascending");
    }
    const std::size_t p_at = r.offset();
    const std::uint8_t p = r.u8();
    if (p < HllSketch::kMinPrecision || p > HllSketch::kMaxPrecision) {
      throw DecodeError(p_at, fmt::format("invalid precision {}", p));
    }
    const auto regs = r.bytes(std::size_t{1} << p);
    try {
      stats.attrs.push_back(
          {attr, HllSketch(p, std::vector<std::uint8_t>(regs.begin(), regs.end()))});
    } catch (const Error& e) {
      throw DecodeError(p_at, e.what());
    }
  }
  if (!r.at_end()) throw DecodeError(r.offset(), "trailing bytes after statistics");
  return stats;
}

}  // namespace rawdb
