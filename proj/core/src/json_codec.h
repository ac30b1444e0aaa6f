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

#include "json.hpp"
#include "rawdb/cluster.h"
#include "rawdb/executor.h"
#include "rawdb/planner.h"
#include "rawdb/report.h"

// nlohmann::json conversions shared by the wire codecs and HTTP servers.
namespace rawdb::wire {

using json = nlohmann::json;

json value_to_json(const Value& v);
Value value_from_json(const json& j);

json to_json(const ScanCounters& c);
ScanCounters counters_from_json(const json& j);

json to_json(const BlockMeta& m);
BlockMeta block_meta_from_json(const json& j);

json to_json(const Schema& s);
Schema schema_from_json(const json& j);

json to_json(const QueryOptions& o);
QueryOptions options_from_json(const json& j);

json to_json(const NodeInfo& n);
NodeInfo node_from_json(const json& j);

json to_json(const FragmentRequest& r);
FragmentRequest fragment_request_from_json(const json& j);

json to_json(const PartialResult& p);
PartialResult partial_from_json(const json& j);

json to_json(const QueryResponse& r);
QueryResponse response_from_json(const json& j);

json table_to_json(const TableDescriptor& t);

json parse(std::string_view text);

}  // namespace rawdb::wire
