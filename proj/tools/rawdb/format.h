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

#include <ostream>
#include <string_view>

#include "rawdb/report.h"

namespace rawdb::cli {

enum class OutputFormat { kTable, kCsv, kJson };

// Throws kInvalidArgument.
OutputFormat parse_output_format(std::string_view name);

// Writes the rows; a 1x1 result in table format prints the bare value.
void print_result(const QueryResponse& response, OutputFormat format, std::ostream& out);

// Per-fragment node, latency, retries, access path and counters.
void print_report(const QueryReport& report, std::ostream& out);

}  // namespace rawdb::cli
