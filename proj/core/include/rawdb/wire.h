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

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rawdb/cluster.h"
#include "rawdb/error.h"
#include "rawdb/executor.h"
#include "rawdb/planner.h"
#include "rawdb/report.h"
#include "rawdb/table.h"

// JSON encodings of the HTTP protocol. Values keep their type: integers as
// JSON integers, finite floats as JSON numbers with a fraction or exponent,
// non-finite floats as {"float": "nan" | "inf" | "-inf"}. Sketch registers
// travel base64-encoded. Decoders throw Error(kDecode).
namespace rawdb::wire {

std::string encode_fragment_request(const FragmentRequest& request);
FragmentRequest decode_fragment_request(std::string_view json);

std::string encode_partial_result(const PartialResult& partial);
PartialResult decode_partial_result(std::string_view json);

std::string encode_query_request(std::string_view sql, const QueryOptions& options);
std::pair<std::string, QueryOptions> decode_query_request(std::string_view json);

std::string encode_query_response(const QueryResponse& response);
QueryResponse decode_query_response(std::string_view json);

// Readable descriptor including the block and replica layout.
std::string encode_table(const TableDescriptor& table);
std::string encode_table_list(const std::vector<std::shared_ptr<const TableDescriptor>>& tables);

std::string encode_nodes(const std::vector<NodeInfo>& nodes);
std::vector<NodeInfo> decode_nodes(std::string_view json);

// {"error": {"code": "...", "message": "..."}}
std::string encode_error(const Error& error);
std::string encode_error(ErrorCode code, std::string_view message);
// Rebuilds the Error carried by an error body (kInternal if unparseable).
Error decode_error(std::string_view json);

// HTTP status for an error code.
int http_status(ErrorCode code);

}  // namespace rawdb::wire
