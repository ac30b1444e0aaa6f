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
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <gtest/gtest.h>

#include "rawdb/decorators.h"
#include "rawdb/schema.h"
#include "rawdb/table.h"

struct sqlite3;

namespace rawdb::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

// Reference tokenizer: splits one record (no terminator) on every ','.
std::vector<std::string> split_row(std::string_view row);

// Splits a newline-terminated stream into records.
std::vector<std::string> split_lines(std::string_view stream);

// Byte offset of each attribute's first byte, computed naively.
std::vector<std::uint32_t> naive_offsets(std::string_view row);

// Random CSV of `rows` x `arity` integer fields drawn from [lo, hi].
std::string random_int_csv(std::mt19937_64& rng, std::size_t rows, std::size_t arity,
                           std::int64_t lo = 0, std::int64_t hi = 999999999);

std::vector<std::string_view> as_views(const std::vector<std::string>& fields);

// Writes every record of `csv` through a decorated writer.
TableDescriptor write_csv_table(WriteTarget target, const std::string& name, const Schema& schema,
                                std::string_view csv, const DecoratorConfig& config);

using Rows = std::vector<std::vector<Value>>;

// In-memory SQLite database used as the reference SQL engine.
class SqliteOracle {
 public:
  SqliteOracle();
  ~SqliteOracle();
  SqliteOracle(const SqliteOracle&) = delete;
  SqliteOracle& operator=(const SqliteOracle&) = delete;

  // Creates `name` with the schema's columns and loads every record of `csv`.
  // Fields that do not parse as their type are stored as NULL, mirroring
  // rows the engine skips.
  void load(const std::string& name, const Schema& schema, std::string_view csv);
  Rows query(const std::string& sql);

 private:
  ::sqlite3* db_ = nullptr;
};

// Compares result rows; numbers compare across int/float with relative
// tolerance `rel_tol`. Unordered comparison sorts both sides first.
::testing::AssertionResult rows_match(const Rows& got, const Rows& want, bool ordered,
                                      double rel_tol = 1e-9);

}  // namespace rawdb::testing
