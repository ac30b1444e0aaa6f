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
#include <filesystem>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rawdb/decorators.h"
#include "rawdb/schema.h"
#include "rawdb/table.h"

namespace rawdb {

inline constexpr std::uint64_t kDefaultMaxValue = 1'000'000'000;

// Seeded synthetic tables: every field a base-10 integer drawn uniformly
// from [0, max_value). Row i is the same for every consumer of a seed.
class RowGenerator {
 public:
  RowGenerator(std::uint32_t attrs, std::uint64_t max_value, std::uint64_t seed);

  // Fields of the next row; views stay valid until the following call.
  std::span<const std::string_view> next();
  // The next row as CSV text without its terminator.
  std::string next_line();

  std::uint32_t attrs() const { return attrs_; }

 private:
  std::uint32_t attrs_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<std::uint64_t> dist_;
  std::string buffer_;
  std::vector<std::size_t> ends_;
  std::vector<std::string_view> views_;
};

// "a0..a{attrs-1}", all int64 with value range [0, max_value).
Schema generated_schema(std::uint32_t attrs, std::uint64_t max_value);

void datagen(std::uint64_t rows, std::uint32_t attrs, std::uint64_t max_value, std::uint64_t seed,
             std::ostream& out);
// Throws kIo when the file cannot be written.
void datagen_file(std::uint64_t rows, std::uint32_t attrs, std::uint64_t max_value, std::uint64_t seed,
                  const std::filesystem::path& path);

// Streams generated rows through a decorated writer; the stored bytes equal
// the datagen output for the same parameters.
TableDescriptor ingest_generated(WriteTarget target, const std::string& table, std::uint64_t rows,
                                 std::uint32_t attrs, std::uint64_t max_value, std::uint64_t seed,
                                 const DecoratorConfig& config);

}  // namespace rawdb
