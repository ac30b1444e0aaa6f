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

#include "rawdb/vertical_index.h"

#include <bit>
#include <cstring>

#include <fmt/format.h>

#include "rawdb/bytes.h"
#include "rawdb/error.h"

namespace rawdb {

namespace {

constexpr std::string_view kMagic = "DNVI";
constexpr std::uint16_t kVersion = 1;

void encode_into(const VerticalIndex& vi, std::string& out) {
  ByteWriter w(out);
  w.magic(kMagic);
  w.u16(kVersion);
  w.u32(vi.key_attr());
  w.u8(static_cast<std::uint8_t>(vi.key_type()));
  w.u64(vi.size());
  const auto& offsets = vi.row_offsets();
  for (std::size_t i = 0; i < vi.size(); ++i) {
    if (vi.key_type() == KeyType::kInt64) {
      w.i64(vi.int_keys()[i]);
    } else {
      w.f64(vi.float_keys()[i]);
    }
    w.u64(offsets[i]);
  }
}

VerticalIndex decode_from(ByteReader& r) {
  r.expect_magic(kMagic);
  const std::size_t version_at = r.offset();
  if (r.u16() != kVersion) throw DecodeError(version_at, "unsupported vertical index version");
  const std::uint32_t key_attr = r.u32();
  const std::size_t type_at = r.offset();
  const std::uint8_t type = r.u8();
  if (type > 1) throw DecodeError(type_at, fmt::format("unknown key type {}", type));
  const std::size_t count_at = r.offset();
  const std::uint64_t count = r.u64();
  if (count > r.remaining() / 16) {
    throw DecodeError(count_at, fmt::format("record count {} exceeds the available bytes", count));
  }
  VerticalIndex vi(key_attr, static_cast<KeyType>(type));
  vi.reserve(count);
  std::uint64_t prev_offset = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    if (vi.key_type() == KeyType::kInt64) {
      const std::int64_t key = r.i64();
      const std::uint64_t off = r.u64();
      if (i > 0 && off <= prev_offset) throw DecodeError(at, "row offsets must increase");
      vi.append_int(key, off);
      prev_offset = off;
    } else {
      const double key = r.f64();
      const std::uint64_t off = r.u64();
      if (i > 0 && off <= prev_offset) throw DecodeError(at, "row offsets must increase");
      vi.append_float(key, off);
      prev_offset = off;
    }
  }
  return vi;
}

}  // namespace

void VerticalIndex::reserve(std::size_t n) {
  row_offsets_.reserve(n);
  if (key_type_ == KeyType::kInt64) {
    int_keys_.reserve(n);
  } else {
    float_keys_.reserve(n);
  }
}

bool VerticalIndex::operator==(const VerticalIndex& other) const {
  if (key_attr_ != other.key_attr_ || key_type_ != other.key_type_ ||
      row_offsets_ != other.row_offsets_ || int_keys_ != other.int_keys_ ||
      float_keys_.size() != other.float_keys_.size()) {
    return false;
  }
  // Bitwise so NaN keys compare equal to themselves.
  return float_keys_.empty() ||
         std::memcmp(float_keys_.data(), other.float_keys_.data(), float_keys_.size() * sizeof(double)) == 0;
}

std::string encode_vi(const VerticalIndex& vi) {
  std::string out;
  out.reserve(4 + 2 + 4 + 1 + 8 + vi.size() * 16);
  encode_into(vi, out);
  return out;
}

VerticalIndex decode_vi(std::string_view bytes) {
  ByteReader r(bytes);
  auto vi = decode_from(r);
  if (!r.at_end()) throw DecodeError(r.offset(), "trailing bytes after vertical index");
  return vi;
}

std::string encode_vi_set(std::span<const VerticalIndex> indexes) {
  std::string out;
  for (const auto& vi : indexes) encode_into(vi, out);
  return out;
}

std::vector<VerticalIndex> decode_vi_set(std::string_view bytes) {
  std::vector<VerticalIndex> out;
  ByteReader r(bytes);
  while (!r.at_end()) out.push_back(decode_from(r));
  return out;
}

}  // namespace rawdb
