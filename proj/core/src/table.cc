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

#include "rawdb/table.h"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "rawdb/bytes.h"
#include "rawdb/error.h"

namespace rawdb {

namespace {

constexpr std::string_view kMagic = "DNTM";
constexpr std::uint16_t kVersion = 1;

void write_block(ByteWriter& w, const BlockMeta& m) {
  w.u8(static_cast<std::uint8_t>(m.id.kind));
  w.u32(m.id.ordinal);
  w.u64(m.length);
  w.u64(m.record_count);
  w.u64(m.checksum);
  w.u8(m.under_replicated ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(m.replicas.size()));
  for (const auto& r : m.replicas) {
    w.u32(r.node);
    w.u8(static_cast<std::uint8_t>(r.tier));
  }
}

BlockMeta read_block(ByteReader& r, const std::string& table) {
  BlockMeta m;
  const std::size_t kind_at = r.offset();
  const std::uint8_t kind = r.u8();
  if (kind > 3) throw DecodeError(kind_at, "unknown block kind");
  m.id = {table, static_cast<BlockKind>(kind), r.u32()};
  m.length = r.u64();
  m.record_count = r.u64();
  m.checksum = r.u64();
  m.under_replicated = r.u8() != 0;
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    Replica rep;
    rep.node = r.u32();
    const std::size_t tier_at = r.offset();
    const std::uint8_t tier = r.u8();
    if (tier > 1) throw DecodeError(tier_at, "unknown storage tier");
    rep.tier = static_cast<StorageTier>(tier);
    m.replicas.push_back(rep);
  }
  return m;
}

void write_u32s(ByteWriter& w, const std::vector<std::uint32_t>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (auto x : v) w.u32(x);
}

std::vector<std::uint32_t> read_u32s(ByteReader& r) {
  const std::uint32_t n = r.u32();
  r.need(4ULL * n, "u32 list");
  std::vector<std::uint32_t> v(n);
  for (auto& x : v) x = r.u32();
  return v;
}

}  // namespace

std::uint64_t TableDescriptor::record_count() const {
  return std::accumulate(data_blocks.begin(), data_blocks.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const BlockMeta& b) { return acc + b.record_count; });
}

std::uint64_t TableDescriptor::byte_count() const {
  return std::accumulate(data_blocks.begin(), data_blocks.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const BlockMeta& b) { return acc + b.length; });
}

bool TableDescriptor::has_vi_on(std::uint32_t attr) const {
  return !vi_blocks.empty() && std::find(key_attrs.begin(), key_attrs.end(), attr) != key_attrs.end();
}

void TableDescriptor::validate() const {
  auto fail = [&](const std::string& what) {
    throw_error(ErrorCode::kCorruption, fmt::format("table '{}': {}", name, what));
  };
  for (std::size_t d = 0; d < data_blocks.size(); ++d) {
    const auto& b = data_blocks[d];
    if (b.id.kind != BlockKind::kData || b.id.ordinal != d || b.id.table != name) {
      fail(fmt::format("data block {} has id {}", d, b.id.to_string()));
    }
    if (b.replicas.empty()) fail(fmt::format("data block {} has no replicas", d));
    for (std::size_t i = 0; i < b.replicas.size(); ++i) {
      if (i > 0 && b.replicas[i].tier == StorageTier::kMemory) {
        fail(fmt::format("data block {} has a memory replica after the first", d));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (b.replicas[j].node == b.replicas[i].node) fail(fmt::format("data block {} repeats a node", d));
      }
    }
  }
  const std::pair<const std::vector<BlockMeta>*, BlockKind> lists[] = {
      {&pm_blocks, BlockKind::kPm}, {&vi_blocks, BlockKind::kVi}, {&stats_blocks, BlockKind::kStats}};
  for (const auto& [list, kind] : lists) {
    if (list->empty()) continue;
    if (list->size() != data_blocks.size()) {
      fail(fmt::format("{} list has {} blocks for {} data blocks", block_kind_name(kind), list->size(),
                       data_blocks.size()));
    }
    for (std::size_t d = 0; d < list->size(); ++d) {
      const auto& m = (*list)[d];
      if (m.id.kind != kind || m.id.ordinal != d) fail(fmt::format("bad metadata id {}", m.id.to_string()));
      if (m.replicas != data_blocks[d].replicas) {
        fail(fmt::format("{} is not co-located with its data block", m.id.to_string()));
      }
    }
  }
  for (const auto a : key_attrs) {
    if (a >= schema.size()) fail(fmt::format("key attribute {} out of range", a));
  }
}

std::string encode_manifest(const TableDescriptor& t) {
  std::string out;
  ByteWriter w(out);
  w.magic(kMagic);
  w.u16(kVersion);
  w.str(t.name);
  w.u64(t.created_ms);
  w.u64(t.target_block_size);
  w.u32(t.replication);
  w.u32(static_cast<std::uint32_t>(t.schema.size()));
  for (const auto& a : t.schema.attributes()) {
    w.str(a.name);
    w.u8(static_cast<std::uint8_t>(a.type));
    w.u8(a.value_range ? 1 : 0);
    if (a.value_range) {
      w.f64(a.value_range->first);
      w.f64(a.value_range->second);
    }
  }
  write_u32s(w, t.key_attrs);
  write_u32s(w, t.pm_sampled);
  for (const auto* list : {&t.data_blocks, &t.pm_blocks, &t.vi_blocks, &t.stats_blocks}) {
    w.u32(static_cast<std::uint32_t>(list->size()));
    for (const auto& b : *list) write_block(w, b);
  }
  if (t.stats) {
    const std::string s = encode_stats(*t.stats);
    w.u8(1);
    w.u64(s.size());
    w.bytes(s);
  } else {
    w.u8(0);
  }
  return out;
}

TableDescriptor decode_manifest(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kMagic);
  const std::size_t version_at = r.offset();
  if (r.u16() != kVersion) throw DecodeError(version_at, "unsupported manifest version");
  TableDescriptor t;
  t.name = r.str();
  t.created_ms = r.u64();
  t.target_block_size = r.u64();
  t.replication = r.u32();
  const std::uint32_t arity = r.u32();
  std::vector<Attribute> attrs;
  for (std::uint32_t i = 0; i < arity; ++i) {
    Attribute a;
    a.name = r.str();
    const std::size_t type_at = r.offset();
    const std::uint8_t type = r.u8();
    if (type > 2) throw DecodeError(type_at, "unknown attribute type");
    a.type = static_cast<AttrType>(type);
    if (r.u8()) {
      const double lo = r.f64();
      const double hi = r.f64();
      a.value_range = std::make_pair(lo, hi);
    }
    attrs.push_back(std::move(a));
  }
  t.schema = Schema(std::move(attrs));
  t.key_attrs = read_u32s(r);
  t.pm_sampled = read_u32s(r);
  for (auto* list : {&t.data_blocks, &t.pm_blocks, &t.vi_blocks, &t.stats_blocks}) {
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) list->push_back(read_block(r, t.name));
  }
  if (r.u8()) {
    const std::uint64_t n = r.u64();
    const std::size_t at = r.offset();
    try {
      t.stats = decode_stats(r.bytes(n));
    } catch (const DecodeError& e) {
      throw DecodeError(at + e.offset(), e.what());
    }
  }
  if (!r.at_end()) throw DecodeError(r.offset(), "trailing bytes after manifest");
  return t;
}

}  // namespace rawdb
