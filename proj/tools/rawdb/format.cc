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

#include "format.h"

#include <algorithm>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rawdb/error.h"
#include "rawdb/wire.h"

namespace rawdb::cli {

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

OutputFormat parse_output_format(std::string_view name) {
  if (name == "table") return OutputFormat::kTable;
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "json") return OutputFormat::kJson;
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown output format '{}'", name));
}

void print_result(const QueryResponse& response, OutputFormat format, std::ostream& out) {
  const ResultSet& r = response.result;
  if (format == OutputFormat::kJson) {
    out << wire::encode_query_response(response) << '\n';
    return;
  }
  std::vector<std::vector<std::string>> cells;
  cells.reserve(r.rows.size());
  for (const auto& row : r.rows) {
    std::vector<std::string> line;
    for (const auto& v : row) line.push_back(value_to_string(v));
    cells.push_back(std::move(line));
  }
  if (format == OutputFormat::kCsv) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) out << (i ? "," : "") << csv_escape(r.columns[i]);
    out << '\n';
    for (const auto& line : cells) {
      for (std::size_t i = 0; i < line.size(); ++i) out << (i ? "," : "") << csv_escape(line[i]);
      out << '\n';
    }
    return;
  }
  if (r.columns.size() == 1 && cells.size() == 1) {
    out << cells[0][0] << '\n';
    return;
  }
  std::vector<std::size_t> width(r.columns.size());
  for (std::size_t i = 0; i < r.columns.size(); ++i) width[i] = r.columns[i].size();
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size() && i < width.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      out << (i ? " | " : "") << fmt::format("{:<{}}", line[i], width[i]);
    }
    out << '\n';
  };
  emit(r.columns);
  for (std::size_t i = 0; i < width.size(); ++i) out << (i ? "-+-" : "") << std::string(width[i], '-');
  out << '\n';
  for (const auto& line : cells) emit(line);
}

void print_report(const QueryReport& report, std::ostream& out) {
  out << fmt::format("query {}: {:.2f} ms, {} retries, {} hedges, {} duplicates dropped\n", report.query_id,
                     report.latency_ms, report.retries, report.hedges, report.duplicates_dropped);
  out << fmt::format("{:<6} {:<10} {:>4} {:>5} {:>10} {:>7} {:<6} {:<3} {:>10} {:>12} {:>9}\n", "phase", "table",
                     "frag", "node", "latency_ms", "retries", "access", "pm", "examined", "bytes", "pm_hits");
  for (const auto& f : report.fragments) {
    out << fmt::format("{:<6} {:<10} {:>4} {:>5} {:>10.2f} {:>7} {:<6} {:<3} {:>10} {:>12} {:>9}\n", f.phase,
                       f.table, f.fragment_id, f.node, f.latency_ms, f.retries, access_path_name(f.access),
                       f.pm_used ? "yes" : "no", f.counters.rows_examined, f.counters.bytes_located,
                       f.counters.pm_hits);
  }
}

}  // namespace rawdb::cli
