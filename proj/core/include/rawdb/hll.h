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
#include <string_view>
#include <vector>

namespace rawdb {

// HyperLogLog distinct counter over 64-bit XXH64 hashes. The top p bits pick
// a register; the register keeps the maximum rank (leading zeros + 1) of the
// remaining 64-p bits. Estimates use the harmonic-mean estimator with the
// linear-counting correction for small cardinalities; a 64-bit hash needs no
// large-range correction.
class HllSketch {
 public:
  static constexpr std::uint8_t kMinPrecision = 4;
  static constexpr std::uint8_t kMaxPrecision = 16;
  static constexpr std::uint8_t kDefaultPrecision = 12;

  explicit HllSketch(std::uint8_t precision = kDefaultPrecision);
  HllSketch(std::uint8_t precision, std::vector<std::uint8_t> registers);

  std::uint8_t precision() const { return precision_; }
  const std::vector<std::uint8_t>& registers() const { return registers_; }

  void insert(std::string_view value_bytes);
  void insert_hash(std::uint64_t hash);

  double estimate() const;

  // Register-wise max. Throws on precision mismatch.
  void merge(const HllSketch& other);

  bool operator==(const HllSketch&) const = default;

 private:
  std::uint8_t precision_;
  std::vector<std::uint8_t> registers_;
};

HllSketch hll_merge(const HllSketch& a, const HllSketch& b);

// Standard error of the estimator, 1.04 / sqrt(2^p).
double hll_standard_error(std::uint8_t precision);

}  // namespace rawdb
