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

#include "rawdb/positional_map.h"

#include <fmt/format.h>

#include "rawdb/bytes.h"
#include "rawdb/error.h"

namespace rawdb {

namespace {

constexpr std::string_view kMagic = "DNPM";
constexpr std::uint16_t kVersion = 1;

}  // namespace

PositionalMap::PositionalMap(std::uint32_t attr_count, std::vector<std::uint32_t> sampled_attrs)
    : attr_count_(attr_count), sampled_(std::move(sampled_attrs)), slot_lookup_(attr_count, -1) {
  for (std::size_t i = 0; i < sampled_.size(); ++i) {
    if (sampled_[i] >= attr_count_) {
      throw_error(ErrorCode::kInvalidArgument,
                  fmt::format("sampled attribute {} out of range for arity {}", sampled_[i], attr_count_));
    }
    if (i > 0 && sampled_[i] <= sampled_[i - 1]) {
      throw_error(ErrorCode::kInvalidArgument, "sampled attributes must be strictly ascending");
    }
    slot_lookup_[sampled_[i]] = static_cast<std::int32_t>(i);
  }
}

void PositionalMap::append(std::span<const std::uint32_t> offsets, std::uint32_t row_len) {
  offsets_.insert(offsets_.end(), offsets.begin(), offsets.end());
  row_lens_.push_back(row_len);
}

void PositionalMap::reserve(std::size_t records) {
  offsets_.reserve(records * sampled_.size());
  row_lens_.reserve(records);
}

std::vector<std::uint64_t> PositionalMap::row_starts() const {
  std::vector<std::uint64_t> starts;
  starts.reserve(row_lens_.size() + 1);
  std::uint64_t pos = 0;
  for (const std::uint32_t len : row_lens_) {
    starts.push_back(pos);
    pos += static_cast<std::uint64_t>(len) + 1;
  }
  starts.push_back(pos);
  return starts;
}

std::uint64_t encoded_pm_size(std::size_t sampled_count, std::uint64_t record_count) {
  const std::uint64_t header = 4 + 2 + 4 + 4 + 4 * sampled_count + 8;
  return header + record_count * 4 * (sampled_count + 1);
}

std::string encode_pm(const PositionalMap& pm) {
  std::string out;
  out.reserve(encoded_pm_size(pm.sampled_count(), pm.record_count()));
  ByteWriter w(out);
  w.magic(kMagic);
  w.u16(kVersion);
  w.u32(pm.attr_count());
  w.u32(static_cast<std::uint32_t>(pm.sampled_count()));
  for (const auto a : pm.sampled_attrs()) w.u32(a);
  w.u64(pm.record_count());
  const std::size_t s = pm.sampled_count();
  const auto& flat = pm.flat_offsets();
  for (std::size_t r = 0; r < pm.record_count(); ++r) {
    for (std::size_t k = 0; k < s; ++k) w.u32(flat[r * s + k]);
    w.u32(pm.row_len(r));
  }
  return out;
}

PositionalMap decode_pm(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kMagic);
  const std::size_t version_at = r.offset();
  if (r.u16() != kVersion) throw DecodeError(version_at, "unsupported positional map version");
  const std::uint32_t attr_count = r.u32();
  const std::size_t count_at = r.offset();
  const std::uint32_t sampled_count = r.u32();
  if (sampled_count > attr_count) throw DecodeError(count_at, "more sampled attributes than attributes");
  std::vector<std::uint32_t> sampled;
  sampled.reserve(sampled_count);
  for (std::uint32_t i = 0; i < sampled_count; ++i) {
    const std::size_t at = r.offset();
    const std::uint32_t a = r.u32();
    if (a >= attr_count || (!sampled.empty() && a <= sampled.back())) {
      throw DecodeError(at, "sampled attribute indices must be ascending and in range");
    }
    sampled.push_back(a);
  }
  const std::size_t records_at = r.offset();
  const std::uint64_t records = r.u64();
  const std::uint64_t per_record = 4ULL * (sampled_count + 1);
  if (per_record != 0 && records > r.remaining() / per_record) {
    throw DecodeError(records_at, fmt::format("record count {} exceeds the available bytes", records));
  }
  PositionalMap pm(attr_count, std::move(sampled));
  pm.reserve(records);
  std::vector<std::uint32_t> offs(sampled_count);
  for (std::uint64_t rec = 0; rec < records; ++rec) {
    const std::size_t entry_at = r.offset();
    for (std::uint32_t k = 0; k < sampled_count; ++k) offs[k] = r.u32();
    const std::uint32_t row_len = r.u32();
    for (std::uint32_t k = 0; k < sampled_count; ++k) {
      if ((k > 0 && offs[k] <= offs[k - 1]) || offs[k] > row_len) {
        throw DecodeError(entry_at, fmt::format("record {} has inconsistent offsets", rec));
      }
    }
    pm.append(offs, row_len);
  }
  if (!r.at_end()) throw DecodeError(r.offset(), "trailing bytes after positional map");
  return pm;
}

}  // namespace rawdb
