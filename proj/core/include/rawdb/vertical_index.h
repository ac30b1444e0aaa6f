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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rawdb {

enum class KeyType : std::uint8_t { kInt64 = 0, kFloat64 = 1 };

// One (key value, row-start offset) entry per record of a data block, in
// record order. Keys are neither unique nor sorted. Float keys are stored as
// parsed, NaN included; NaN never satisfies a comparison, matching what a
// full scan would decide for that row.
class VerticalIndex {
 public:
  VerticalIndex() = default;
  VerticalIndex(std::uint32_t key_attr, KeyType key_type) : key_attr_(key_attr), key_type_(key_type) {}

  std::uint32_t key_attr() const { return key_attr_; }
  KeyType key_type() const { return key_type_; }
  std::size_t size() const { return row_offsets_.size(); }

  void append_int(std::int64_t key, std::uint64_t row_offset) {
    int_keys_.push_back(key);
    row_offsets_.push_back(row_offset);
  }
  void append_float(double key, std::uint64_t row_offset) {
    float_keys_.push_back(key);
    row_offsets_.push_back(row_offset);
  }
  void reserve(std::size_t n);

  const std::vector<std::int64_t>& int_keys() const { return int_keys_; }
  const std::vector<double>& float_keys() const { return float_keys_; }
  const std::vector<std::uint64_t>& row_offsets() const { return row_offsets_; }

  bool operator==(const VerticalIndex& other) const;

 private:
  std::uint32_t key_attr_ = 0;
  KeyType key_type_ = KeyType::kInt64;
  std::vector<std::int64_t> int_keys_;
  std::vector<double> float_keys_;
  std::vector<std::uint64_t> row_offsets_;
};

// "DNVI" u16 version=1 u32 key_attr u8 key_type u64 record_count, then per
// record an 8-byte key (int64 or IEEE-754 f64) and a u64 row offset.
std::string encode_vi(const VerticalIndex& vi);
VerticalIndex decode_vi(std::string_view bytes);

// A vi block holds one DNVI section per key attribute, concatenated.
std::string encode_vi_set(std::span<const VerticalIndex> indexes);
std::vector<VerticalIndex> decode_vi_set(std::string_view bytes);

}  // namespace rawdb
