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

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "rawdb/base64.h"
#include "rawdb/bytes.h"
#include "rawdb/error.h"
#include "rawdb/hash.h"
#include "rawdb/hll.h"
#include "rawdb/positional_map.h"
#include "rawdb/schema.h"
#include "rawdb/statistics.h"
#include "rawdb/vertical_index.h"

namespace rawdb {
namespace {

// Reference values from the xxHash project's Python binding.
TEST(Xxh64, KnownVectors) {
  EXPECT_EQ(xxh64(""), 0xef46db3751d8e999ULL);
  EXPECT_EQ(xxh64("a"), 0xd24ec4f1a98c6e5bULL);
  EXPECT_EQ(xxh64("abc"), 0x44bc2cf5ad770999ULL);
  EXPECT_EQ(xxh64("Nobody inspects the spammish repetition"), 0xfbcea83c8a378bf1ULL);
  EXPECT_EQ(xxh64("", 42), 0x98b1582b0977e704ULL);
  EXPECT_EQ(xxh64("abc", 42), 0x13c1d910702770e6ULL);
  EXPECT_EQ(xxh64("Nobody inspects the spammish repetition", 42), 0x44582824ca1018b5ULL);
  std::string long_input;
  for (int r = 0; r < 3; ++r) {
    for (int i = 0; i < 256; ++i) long_input.push_back(static_cast<char>(i));
  }
  EXPECT_EQ(xxh64(long_input), 0x8e03c838c596036fULL);
  EXPECT_EQ(xxh64(long_input, 42), 0x5a08dead05df1080ULL);
}

TEST(Base64, Rfc4648Vectors) {
  const std::pair<const char*, const char*> cases[] = {
      {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},         {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"},
  };
  for (const auto& [plain, encoded] : cases) {
    EXPECT_EQ(base64_encode(plain), encoded);
    EXPECT_EQ(base64_decode(encoded), plain);
  }
  EXPECT_THROW(base64_decode("Zm9v!"), Error);
  EXPECT_THROW(base64_decode("Zm9"), Error);
}

TEST(Base64, RoundTripsBinary) {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 200; ++n) {
    std::string s(n, '\0');
    for (auto& c : s) c = static_cast<char>(rng());
    EXPECT_EQ(base64_decode(base64_encode(s)), s);
  }
}

TEST(Schema, ParseAndRender) {
  auto s = Schema::parse("id:int64,score:float64,name:text,n");
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[1].type, AttrType::kFloat64);
  EXPECT_EQ(s[3].type, AttrType::kInt64);
  EXPECT_EQ(*s.index_of("name"), 2u);
  EXPECT_FALSE(s.index_of("missing"));
  EXPECT_EQ(Schema::parse(s.to_string()), s);
  EXPECT_THROW(Schema::parse("a:int64,a:int64"), Error);
  EXPECT_THROW(Schema::parse("a:blob"), Error);
}

TEST(Values, ParsingIsStrict) {
  EXPECT_EQ(parse_int64("-17"), -17);
  EXPECT_FALSE(parse_int64("+17"));
  EXPECT_FALSE(parse_int64(" 17"));
  EXPECT_FALSE(parse_int64("9223372036854775808"));
  EXPECT_FALSE(parse_int64(""));
  EXPECT_DOUBLE_EQ(*parse_float64("2.5e3"), 2500.0);
  EXPECT_TRUE(std::isnan(*parse_float64("nan")));
  EXPECT_FALSE(parse_float64("1.5x"));
}

TEST(Values, NumericComparisonAcrossTypes) {
  EXPECT_EQ(compare_values(Value(std::int64_t{2}), Value(2.0)), std::partial_ordering::equivalent);
  EXPECT_EQ(compare_values(Value(std::int64_t{2}), Value(2.5)), std::partial_ordering::less);
  EXPECT_EQ(compare_values(Value(std::nan("")), Value(1.0)), std::partial_ordering::unordered);
  EXPECT_GT(total_compare(Value(std::nan("")), Value(1e300)), 0);
  EXPECT_LT(total_compare(Value{}, Value(std::int64_t{0})), 0);
}

PositionalMap random_pm(std::mt19937_64& rng, std::uint32_t arity, std::uint32_t k, std::size_t rows) {
  std::vector<std::uint32_t> sampled;
  for (std::uint32_t a = 0; k && a < arity; a += k) sampled.push_back(a);
  PositionalMap pm(arity, sampled);
  std::vector<std::uint32_t> offs(sampled.size());
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint32_t o = 0;
    for (std::size_t i = 0; i < offs.size(); ++i) {
      if (i > 0) o += 2 + static_cast<std::uint32_t>(rng() % 20);
      offs[i] = o;
    }
    pm.append(offs, o + static_cast<std::uint32_t>(rng() % 20));
  }
  return pm;
}

TEST(PositionalMap, RoundTripAndClosedFormSize) {
  std::mt19937_64 rng(2);
  for (std::uint32_t k : {0u, 1u, 2u, 7u, 10u}) {
    for (std::size_t rows : {0u, 1u, 37u, 1000u}) {
      auto pm = random_pm(rng, 30, k, rows);
      const auto bytes = encode_pm(pm);
      EXPECT_EQ(bytes.size(), encoded_pm_size(pm.sampled_count(), rows));
      EXPECT_EQ(decode_pm(bytes), pm);
    }
  }
}

// The header is 4 magic + 2 version + 4 arity + 4 count + 4S sampled + 8
// records, and each record adds 4(S + 1) bytes.
TEST(PositionalMap, SizeMatchesLayoutArithmetic) {
  for (std::size_t s : {0u, 1u, 15u}) {
    for (std::uint64_t r : {0ull, 1ull, 1000000ull}) {
      EXPECT_EQ(encoded_pm_size(s, r), 4 + 2 + 4 + 4 + 4 * s + 8 + r * 4 * (s + 1));
    }
  }
}

TEST(PositionalMap, ByteLayout) {
  PositionalMap pm(3, {0, 2});
  const std::uint32_t offs[] = {0, 4};
  pm.append(offs, 6);
  const auto b = encode_pm(pm);
  ASSERT_EQ(b.substr(0, 4), "DNPM");
  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + i]);
    return v;
  };
  EXPECT_EQ(static_cast<unsigned char>(b[4]) | (static_cast<unsigned char>(b[5]) << 8), 1);
  EXPECT_EQ(u32(6), 3u);
  EXPECT_EQ(u32(10), 2u);
  EXPECT_EQ(u32(14), 0u);
  EXPECT_EQ(u32(18), 2u);
  EXPECT_EQ(u32(22), 1u);
  EXPECT_EQ(u32(26), 0u);
  EXPECT_EQ(u32(30), 0u);
  EXPECT_EQ(u32(34), 4u);
  EXPECT_EQ(u32(38), 6u);
  EXPECT_EQ(b.size(), 42u);
}

TEST(PositionalMap, RowStartsAccumulateTerminators) {
  PositionalMap pm(2, {0});
  const std::uint32_t z[] = {0};
  pm.append(z, 3);
  pm.append(z, 5);
  EXPECT_EQ(pm.row_starts(), (std::vector<std::uint64_t>{0, 4, 10}));
}

TEST(PositionalMap, RejectsMalformedBytes) {
  std::mt19937_64 rng(4);
  const auto good = encode_pm(random_pm(rng, 10, 3, 5));
  EXPECT_THROW(decode_pm(good.substr(0, good.size() - 1)), Error);
  EXPECT_THROW(decode_pm("XXPM" + good.substr(4)), Error);
  EXPECT_THROW(decode_pm(good + "x"), Error);
  std::string bad_version = good;
  bad_version[4] = 9;
  EXPECT_THROW(decode_pm(bad_version), Error);
}

TEST(VerticalIndex, RoundTripIntAndFloat) {
  VerticalIndex iv(3, KeyType::kInt64);
  iv.append_int(-5, 0);
  iv.append_int(INT64_MAX, 17);
  VerticalIndex fv(1, KeyType::kFloat64);
  fv.append_float(2.5, 0);
  fv.append_float(std::nan(""), 9);
  EXPECT_EQ(decode_vi(encode_vi(iv)), iv);
  const auto fback = decode_vi(encode_vi(fv));
  EXPECT_EQ(fback.size(), 2u);
  EXPECT_TRUE(std::isnan(fback.float_keys()[1]));
  EXPECT_EQ(fback.row_offsets(), fv.row_offsets());
  EXPECT_EQ(encode_vi(iv).size(), 4 + 2 + 4 + 1 + 8 + 2 * 16u);

  const std::vector<VerticalIndex> set{iv, fv};
  const auto decoded = decode_vi_set(encode_vi_set(set));
  ASSERT_EQ(decoded.size(), 2u);
  EXPECT_EQ(decoded[0], iv);
  EXPECT_EQ(decoded[1].key_attr(), 1u);
  EXPECT_THROW(decode_vi(encode_vi(iv).substr(1)), Error);
}

// Textbook HyperLogLog written independently of the library, over the same
// verified hash.
struct ReferenceHll {
  int p;
  std::vector<std::uint8_t> m;
  explicit ReferenceHll(int precision) : p(precision), m(std::size_t{1} << precision, 0) {}
  void add(std::string_view v) {
    const std::uint64_t h = xxh64(v);
    const std::uint64_t idx = h >> (64 - p);
    const std::uint64_t rest = h << p;
    const int rank = rest == 0 ? 64 - p + 1 : std::countl_zero(rest) + 1;
    m[idx] = std::max<std::uint8_t>(m[idx], static_cast<std::uint8_t>(std::min(rank, 64 - p + 1)));
  }
  double estimate() const {
    const double M = static_cast<double>(m.size());
    const double alpha = M == 16 ? 0.673 : M == 32 ? 0.697 : M == 64 ? 0.709 : 0.7213 / (1 + 1.079 / M);
    double sum = 0;
    int zeros = 0;
    for (auto r : m) {
      sum += std::ldexp(1.0, -r);
      zeros += r == 0;
    }
    const double raw = alpha * M * M / sum;
    if (raw <= 2.5 * M && zeros > 0) return M * std::log(M / zeros);
    return raw;
  }
};

TEST(Hll, MatchesReferenceImplementation) {
  for (int p : {4, 10, 12, 14}) {
    HllSketch s(static_cast<std::uint8_t>(p));
    ReferenceHll ref(p);
    for (int i = 0; i < 50000; ++i) {
      const auto v = std::to_string(i * 7919);
      s.insert(v);
      ref.add(v);
      if (i == 10 || i == 1000 || i == 49999) EXPECT_NEAR(s.estimate(), ref.estimate(), 1e-6 * ref.estimate());
    }
    EXPECT_EQ(s.registers(), ref.m);
  }
}

TEST(Hll, EmptyAndDuplicates) {
  HllSketch s;
  EXPECT_EQ(s.estimate(), 0.0);
  for (int i = 0; i < 1000; ++i) s.insert("same");
  EXPECT_NEAR(s.estimate(), 1.0, 0.01);
}

TEST(Hll, AccuracyWithinThreeStandardErrors) {
  std::mt19937_64 rng(12);
  const double se = hll_standard_error(12);
  EXPECT_NEAR(se, 1.04 / 64.0, 1e-12);
  for (std::uint64_t n : {100ull, 5000ull, 100000ull, 1000000ull}) {
    HllSketch s(12);
    std::set<std::uint64_t> seen;
    while (seen.size() < n) {
      const auto v = rng();
      if (seen.insert(v).second) s.insert(std::to_string(v));
    }
    EXPECT_NEAR(s.estimate() / static_cast<double>(n), 1.0, 3 * se) << n;
  }
}

// Merging sketches of any partition equals sketching the union.
TEST(Hll, MergeIsUnion) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    HllSketch whole(10), a(10), b(10);
    for (int i = 0; i < 2000; ++i) {
      const auto v = std::to_string(rng() % 3000);
      whole.insert(v);
      (rng() % 2 ? a : b).insert(v);
    }
    EXPECT_EQ(hll_merge(a, b), whole);
    EXPECT_EQ(hll_merge(b, a), whole);
  }
  HllSketch p10(10), p12(12);
  EXPECT_THROW(p10.merge(p12), Error);
  EXPECT_THROW(HllSketch(3), Error);
  EXPECT_THROW(HllSketch(17), Error);
}

TEST(Statistics, MergeAndEncode) {
  TableStatistics a{10, {{0, HllSketch(8)}, {2, HllSketch(8)}}};
  TableStatistics b{5, {{0, HllSketch(8)}, {2, HllSketch(8)}}};
  a.attrs[0].sketch.insert("x");
  b.attrs[0].sketch.insert("y");
  b.attrs[1].sketch.insert("z");
  const std::vector<TableStatistics> parts{a, b};
  const auto merged = stats_merge(parts);
  EXPECT_EQ(merged.record_count, 15u);
  EXPECT_NEAR(*merged.distinct_estimate(0), 2.0, 0.05);
  EXPECT_NEAR(*merged.distinct_estimate(2), 1.0, 0.05);
  EXPECT_FALSE(merged.distinct_estimate(1));
  EXPECT_EQ(decode_stats(encode_stats(merged)), merged);
  EXPECT_EQ(encode_stats(merged).size(), 4 + 2 + 8 + 4 + 2 * (4 + 1 + 256u));

  TableStatistics c{1, {{1, HllSketch(8)}}};
  const std::vector<TableStatistics> mismatched{a, c};
  EXPECT_THROW(stats_merge(mismatched), Error);
  EXPECT_THROW(stats_merge({}), Error);
  EXPECT_THROW(decode_stats("DNST"), Error);
}

}  // namespace
}  // namespace rawdb
