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

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "rawdb/error.h"

namespace rawdb {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

// Appends little-endian scalars to a byte string.
class ByteWriter {
 public:
  explicit ByteWriter(std::string& out) : out_(out) {}

  void magic(std::string_view m) { out_.append(m); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i64(std::int64_t v) { put(v); }
  void f64(double v) { put(v); }
  void bytes(std::string_view b) { out_.append(b); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

 private:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }

  std::string& out_;
};

// Reads little-endian scalars; truncation raises DecodeError naming the
// offset of the short read.
class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  bool at_end() const { return pos_ == in_.size(); }

  void expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (in_.substr(pos_, m.size()) != m) {
      throw DecodeError(pos_, "bad magic, expected '" + std::string(m) + "'");
    }
    pos_ += m.size();
  }
  std::uint8_t u8() { return get<std::uint8_t>("u8"); }
  std::uint16_t u16() { return get<std::uint16_t>("u16"); }
  std::uint32_t u32() { return get<std::uint32_t>("u32"); }
  std::uint64_t u64() { return get<std::uint64_t>("u64"); }
  std::int64_t i64() { return get<std::int64_t>("i64"); }
  double f64() { return get<double>("f64"); }
  std::string_view bytes(std::size_t n) {
    need(n, "byte run");
    auto out = in_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::string str() {
    const std::uint32_t n = u32();
    return std::string(bytes(n));
  }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw DecodeError(pos_, std::string("truncated input reading ") + what);
    }
  }

 private:
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace rawdb
