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
#include <vector>

namespace rawdb {

// Structural index for one data block: for every record, the row-relative
// byte offset of the first data byte of each sampled attribute, plus the row
// length excluding the terminator. Row i starts at sum_{j<i}(row_len_j + 1).
class PositionalMap {
 public:
  PositionalMap() = default;
  PositionalMap(std::uint32_t attr_count, std::vector<std::uint32_t> sampled_attrs);

  std::uint32_t attr_count() const { return attr_count_; }
  const std::vector<std::uint32_t>& sampled_attrs() const { return sampled_; }
  std::size_t sampled_count() const { return sampled_.size(); }
  std::size_t record_count() const { return row_lens_.size(); }

  // Slot of `attr` within sampled_attrs(), if sampled.
  std::optional<std::size_t> slot_of(std::uint32_t attr) const {
    if (attr >= slot_lookup_.size() || slot_lookup_[attr] < 0) return std::nullopt;
    return static_cast<std::size_t>(slot_lookup_[attr]);
  }

  std::span<const std::uint32_t> offsets(std::size_t record) const {
    return {offsets_.data() + record * sampled_.size(), sampled_.size()};
  }
  std::uint32_t row_len(std::size_t record) const { return row_lens_[record]; }
  const std::vector<std::uint32_t>& row_lens() const { return row_lens_; }
  const std::vector<std::uint32_t>& flat_offsets() const { return offsets_; }

  void append(std::span<const std::uint32_t> offsets, std::uint32_t row_len);
  void reserve(std::size_t records);

  // Block-relative start of every record, plus a final entry equal to the
  // byte length the map covers.
  std::vector<std::uint64_t> row_starts() const;

  bool operator==(const PositionalMap& other) const {
    return attr_count_ == other.attr_count_ && sampled_ == other.sampled_ &&
           offsets_ == other.offsets_ && row_lens_ == other.row_lens_;
  }

 private:
  std::uint32_t attr_count_ = 0;
  std::vector<std::uint32_t> sampled_;
  std::vector<std::int32_t> slot_lookup_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> row_lens_;
};

// On-disk layout (little-endian):
//   "DNPM" u16 version=1 u32 attr_count u32 sampled_count u32[S] sampled
//   u64 record_count, then per record S x u32 offsets followed by u32 row_len.
std::string encode_pm(const PositionalMap& pm);
PositionalMap decode_pm(std::string_view bytes);

// header + record_count * 4 * (S + 1)
std::uint64_t encoded_pm_size(std::size_t sampled_count, std::uint64_t record_count);

}  // namespace rawdb
