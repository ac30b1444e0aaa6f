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

#include "rawdb/datagen.h"

#include <charconv>
#include <fstream>

#include "rawdb/error.h"

namespace rawdb {

RowGenerator::RowGenerator(std::uint32_t attrs, std::uint64_t max_value, std::uint64_t seed)
    : attrs_(attrs), rng_(seed), dist_(0, max_value == 0 ? 0 : max_value - 1), ends_(attrs), views_(attrs) {
  if (attrs == 0) throw Error(ErrorCode::kInvalidArgument, "attrs must be at least 1");
  if (max_value == 0) throw Error(ErrorCode::kInvalidArgument, "max_value must be at least 1");
  buffer_.resize(static_cast<std::size_t>(attrs) * 21);
}

std::span<const std::string_view> RowGenerator::next() {
  char* p = buffer_.data();
  char* const end = p + buffer_.size();
  for (std::uint32_t i = 0; i < attrs_; ++i) {
    p = std::to_chars(p, end, dist_(rng_)).ptr;
    ends_[i] = static_cast<std::size_t>(p - buffer_.data());
  }
  std::size_t begin = 0;
  for (std::uint32_t i = 0; i < attrs_; ++i) {
    views_[i] = std::string_view(buffer_.data() + begin, ends_[i] - begin);
    begin = ends_[i];
  }
  return views_;
}

std::string RowGenerator::next_line() {
  const auto fields = next();
  std::string line;
  line.reserve(ends_.back() + attrs_);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(',');
    line.append(fields[i]);
  }
  return line;
}

Schema generated_schema(std::uint32_t attrs, std::uint64_t max_value) {
  Schema schema = Schema::uniform_int(attrs);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    schema[i].value_range = std::make_pair(0.0, static_cast<double>(max_value));
  }
  return schema;
}

void datagen(std::uint64_t rows, std::uint32_t attrs, std::uint64_t max_value, std::uint64_t seed,
             std::ostream& out) {
  if (rows == 0) throw Error(ErrorCode::kInvalidArgument, "rows must be at least 1");
  RowGenerator gen(attrs, max_value, seed);
  std::string chunk;
  chunk.reserve(1 << 20);
  for (std::uint64_t r = 0; r < rows; ++r) {
    const auto fields = gen.next();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) chunk.push_back(',');
      chunk.append(fields[i]);
    }
    chunk.push_back('\n');
    if (chunk.size() >= (1 << 20) - 4096) {
      out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
      chunk.clear();
    }
  }
  out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
}

void datagen_file(std::uint64_t rows, std::uint32_t attrs, std::uint64_t max_value, std::uint64_t seed,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  datagen(rows, attrs, max_value, seed, out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

TableDescriptor ingest_generated(WriteTarget target, const std::string& table, std::uint64_t rows,
                                 std::uint32_t attrs, std::uint64_t max_value, std::uint64_t seed,
                                 const DecoratorConfig& config) {
  if (rows == 0) throw Error(ErrorCode::kInvalidArgument, "rows must be at least 1");
  RowGenerator gen(attrs, max_value, seed);
  DecoratedWriter writer(std::move(target), table, generated_schema(attrs, max_value), config);
  for (std::uint64_t r = 0; r < rows; ++r) writer.write_tuple(gen.next());
  return writer.close();
}

}  // namespace rawdb
