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

#include "rawdb/hll.h"

#include <algorithm>
#include <bit>
#include <cmath>

#include <fmt/format.h>

#include "rawdb/error.h"
#include "rawdb/hash.h"

namespace rawdb {

namespace {

void check_precision(std::uint8_t p) {
  if (p < HllSketch::kMinPrecision || p > HllSketch::kMaxPrecision) {
    throw_error(ErrorCode::kInvalidArgument,
                fmt::format("HyperLogLog precision {} outside [{}, {}]", p, HllSketch::kMinPrecision,
                            HllSketch::kMaxPrecision));
  }
}

double alpha(std::size_t m) {
  switch (m) {
    case 16:
      return 0.673;
    case 32:
      return 0.697;
    case 64:
      return 0.709;
    default:
      return 0.7213 / (1.0 + 1.079 / static_cast<double>(m));
  }
}

}  // namespace

HllSketch::HllSketch(std::uint8_t precision) : precision_(precision) {
  check_precision(precision);
  registers_.assign(std::size_t{1} << precision, 0);
}

HllSketch::HllSketch(std::uint8_t precision, std::vector<std::uint8_t> registers)
    : precision_(precision), registers_(std::move(registers)) {
  check_precision(precision);
  if (registers_.size() != (std::size_t{1} << precision)) {
    throw_error(ErrorCode::kInvalidArgument, "register count does not match precision");
  }
  const auto max_rank = static_cast<std::uint8_t>(64 - precision + 1);
  for (const auto reg : registers_) {
    if (reg > max_rank) throw_error(ErrorCode::kInvalidArgument, "register rank out of range");
  }
}

void HllSketch::insert(std::string_view value_bytes) { insert_hash(xxh64(value_bytes, 0)); }

void HllSketch::insert_hash(std::uint64_t hash) {
  const std::size_t index = hash >> (64 - precision_);
  const std::uint64_t rest = hash << precision_;
  const int max_rank = 64 - precision_ + 1;
  const int rank = rest == 0 ? max_rank : std::min(std::countl_zero(rest) + 1, max_rank);
  auto& reg = registers_[index];
  if (rank > reg) reg = static_cast<std::uint8_t>(rank);
}

double HllSketch::estimate() const {
  const std::size_t m = registers_.size();
  double sum = 0.0;
  std::size_t zeros = 0;
  for (const auto reg : registers_) {
    sum += std::ldexp(1.0, -static_cast<int>(reg));
    if (reg == 0) ++zeros;
  }
  if (zeros == m) return 0.0;
  const double md = static_cast<double>(m);
  const double raw = alpha(m) * md * md / sum;
  if (raw <= 2.5 * md && zeros > 0) {
    return md * std::log(md / static_cast<double>(zeros));
  }
  return raw;
}

void HllSketch::merge(const HllSketch& other) {
  if (other.precision_ != precision_) {
    throw_error(ErrorCode::kInvalidArgument,
                fmt::format("cannot merge sketches of precision {} and {}", precision_, other.precision_));
  }
  for (std::size_t i = 0; i < registers_.size(); ++i) {
    registers_[i] = std::max(registers_[i], other.registers_[i]);
  }
}

HllSketch hll_merge(const HllSketch& a, const HllSketch& b) {
  HllSketch out = a;
  out.merge(b);
  return out;
}

double hll_standard_error(std::uint8_t precision) {
  return 1.04 / std::sqrt(std::ldexp(1.0, precision));
}

}  // namespace rawdb
