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

#include "test_support.h"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <sqlite3.h>

#include "rawdb/executor.h"
#include <unistd.h>

namespace rawdb::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("rawdb-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<std::string> split_row(std::string_view row) {
  std::vector<std::string> out(1);
  for (char c : row) {
    if (c == ',') out.emplace_back();
    else out.back().push_back(c);
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view stream) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : stream) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

std::vector<std::uint32_t> naive_offsets(std::string_view row) {
  std::vector<std::uint32_t> out{0};
  for (std::uint32_t i = 0; i < row.size(); ++i) {
    if (row[i] == ',') out.push_back(i + 1);
  }
  return out;
}

std::string random_int_csv(std::mt19937_64& rng, std::size_t rows, std::size_t arity,
                           std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  std::string out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t a = 0; a < arity; ++a) {
      if (a) out.push_back(',');
      out += std::to_string(dist(rng));
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<std::string_view> as_views(const std::vector<std::string>& fields) {
  return {fields.begin(), fields.end()};
}

TableDescriptor write_csv_table(WriteTarget target, const std::string& name, const Schema& schema,
                                std::string_view csv, const DecoratorConfig& config) {
  DecoratedWriter writer(std::move(target), name, schema, config);
  for (const auto& line : split_lines(csv)) {
    const auto fields = split_row(line);
    const auto views = as_views(fields);
    writer.write_tuple(views);
  }
  return writer.close();
}

namespace {

void check_sqlite(sqlite3* db, int rc, const std::string& what) {
  if (rc != SQLITE_OK && rc != SQLITE_DONE && rc != SQLITE_ROW) {
    throw std::runtime_error(what + ": " + sqlite3_errmsg(db));
  }
}

const char* sqlite_type(AttrType t) {
  switch (t) {
    case AttrType::kInt64: return "INTEGER";
    case AttrType::kFloat64: return "REAL";
    case AttrType::kText: return "TEXT";
  }
  return "TEXT";
}

}  // namespace

SqliteOracle::SqliteOracle() { check_sqlite(db_, sqlite3_open(":memory:", &db_), "open"); }

SqliteOracle::~SqliteOracle() { sqlite3_close(db_); }

void SqliteOracle::load(const std::string& name, const Schema& schema, std::string_view csv) {
  std::string ddl = "CREATE TABLE " + name + " (";
  std::string insert = "INSERT INTO " + name + " VALUES (";
  for (std::size_t i = 0; i < schema.size(); ++i) {
    ddl += (i ? ", " : "") + schema[i].name + " " + sqlite_type(schema[i].type);
    insert += i ? ", ?" : "?";
  }
  ddl += ")";
  insert += ")";
  check_sqlite(db_, sqlite3_exec(db_, ddl.c_str(), nullptr, nullptr, nullptr), ddl);
  check_sqlite(db_, sqlite3_exec(db_, "BEGIN", nullptr, nullptr, nullptr), "begin");
  sqlite3_stmt* stmt = nullptr;
  check_sqlite(db_, sqlite3_prepare_v2(db_, insert.c_str(), -1, &stmt, nullptr), insert);
  for (const auto& line : split_lines(csv)) {
    const auto fields = split_row(line);
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const int col = static_cast<int>(i + 1);
      const auto v = parse_value(fields[i], schema[i].type);
      if (!v || (std::holds_alternative<double>(*v) && std::isnan(std::get<double>(*v)))) {
        sqlite3_bind_null(stmt, col);
      } else if (const auto* iv = std::get_if<std::int64_t>(&*v)) {
        sqlite3_bind_int64(stmt, col, *iv);
      } else if (const auto* dv = std::get_if<double>(&*v)) {
        sqlite3_bind_double(stmt, col, *dv);
      } else {
        const auto& text = std::get<std::string>(*v);
        sqlite3_bind_text(stmt, col, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
      }
    }
    check_sqlite(db_, sqlite3_step(stmt), "insert");
    sqlite3_reset(stmt);
  }
  sqlite3_finalize(stmt);
  check_sqlite(db_, sqlite3_exec(db_, "COMMIT", nullptr, nullptr, nullptr), "commit");
}

Rows SqliteOracle::query(const std::string& sql) {
  sqlite3_stmt* stmt = nullptr;
  check_sqlite(db_, sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, nullptr), sql);
  Rows rows;
  int rc;
  while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
    std::vector<Value> row;
    for (int c = 0; c < sqlite3_column_count(stmt); ++c) {
      switch (sqlite3_column_type(stmt, c)) {
        case SQLITE_INTEGER: row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(stmt, c))); break;
        case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(stmt, c)); break;
        case SQLITE_NULL: row.emplace_back(); break;
        default:
          row.emplace_back(std::string(reinterpret_cast<const char*>(sqlite3_column_text(stmt, c)),
                                       static_cast<std::size_t>(sqlite3_column_bytes(stmt, c))));
      }
    }
    rows.push_back(std::move(row));
  }
  sqlite3_finalize(stmt);
  check_sqlite(db_, rc, sql);
  return rows;
}

namespace {

bool value_close(const Value& a, const Value& b, double rel_tol) {
  const bool an = std::holds_alternative<std::int64_t>(a) || std::holds_alternative<double>(a);
  const bool bn = std::holds_alternative<std::int64_t>(b) || std::holds_alternative<double>(b);
  if (an && bn) {
    auto num = [](const Value& v) {
      if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
      return std::get<double>(v);
    };
    const double x = num(a), y = num(b);
    return std::abs(x - y) <= rel_tol * std::max({1.0, std::abs(x), std::abs(y)});
  }
  return values_equal(a, b) || (is_null(a) && is_null(b));
}

std::string row_string(const std::vector<Value>& row) {
  std::string s = "(";
  for (std::size_t i = 0; i < row.size(); ++i) s += (i ? ", " : "") + value_to_string(row[i]);
  return s + ")";
}

}  // namespace

::testing::AssertionResult rows_match(const Rows& got_in, const Rows& want_in, bool ordered, double rel_tol) {
  Rows got = got_in, want = want_in;
  if (!ordered) {
    std::sort(got.begin(), got.end(), RowLess{});
    std::sort(want.begin(), want.end(), RowLess{});
  }
  if (got.size() != want.size()) {
    return ::testing::AssertionFailure() << "row count " << got.size() << " != expected " << want.size()
                                         << (got.empty() ? "" : "; first row " + row_string(got[0]))
                                         << (want.empty() ? "" : "; expected first " + row_string(want[0]));
  }
  for (std::size_t r = 0; r < got.size(); ++r) {
    bool same = got[r].size() == want[r].size();
    for (std::size_t c = 0; same && c < got[r].size(); ++c) same = value_close(got[r][c], want[r][c], rel_tol);
    if (!same) {
      return ::testing::AssertionFailure() << "row " << r << ": " << row_string(got[r]) << " != expected "
                                           << row_string(want[r]);
    }
  }
  return ::testing::AssertionSuccess();
}

}  // namespace rawdb::testing
