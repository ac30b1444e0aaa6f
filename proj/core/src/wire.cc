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

#include "rawdb/wire.h"

#include <cmath>
#include <limits>

#include "json_codec.h"
#include "rawdb/base64.h"
#include "rawdb/error.h"

namespace rawdb::wire {

namespace {

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecode, std::string("malformed message: ") + e.what());
  }
}

json opt_u64(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::uint64_t> opt_u64_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::uint64_t>();
}

json comparison_to_json(const Comparison& c) {
  return {{"attr", c.attr}, {"op", compare_op_symbol(c.op)}, {"literal", value_to_json(c.literal)}};
}

Comparison comparison_from_json(const json& j) {
  return {j.at("attr").get<std::uint32_t>(), parse_compare_op(j.at("op").get<std::string>()),
          value_from_json(j.at("literal"))};
}

json block_id_to_json(const BlockId& id) {
  return {{"table", id.table}, {"kind", block_kind_name(id.kind)}, {"ordinal", id.ordinal}};
}

BlockId block_id_from_json(const json& j) {
  return {j.at("table").get<std::string>(), parse_block_kind(j.at("kind").get<std::string>()),
          j.at("ordinal").get<std::uint32_t>()};
}

json scan_to_json(const ScanRequest& s) {
  json pred = json::array();
  for (const auto& c : s.predicate) pred.push_back(comparison_to_json(c));
  return {{"block", block_id_to_json(s.block)},
          {"projection", s.projection},
          {"predicate", pred},
          {"access", access_path_name(s.access)},
          {"index_attr", s.index_attr},
          {"limit", opt_u64(s.limit)}};
}

ScanRequest scan_from_json(const json& j) {
  ScanRequest s;
  s.block = block_id_from_json(j.at("block"));
  s.projection = j.at("projection").get<std::vector<std::uint32_t>>();
  for (const auto& c : j.at("predicate")) s.predicate.push_back(comparison_from_json(c));
  s.access = j.at("access").get<std::string>() == "index" ? AccessPath::kIndex : AccessPath::kFull;
  s.index_attr = j.value("index_attr", 0u);
  s.limit = opt_u64_from(j, "limit");
  return s;
}

AggFn agg_fn_from_name(const std::string& name) {
  for (AggFn fn : {AggFn::kCount, AggFn::kCountDistinct, AggFn::kSum, AggFn::kAvg, AggFn::kMin,
                   AggFn::kMax}) {
    if (agg_fn_name(fn) == name) return fn;
  }
  throw Error(ErrorCode::kDecode, "unknown aggregate '" + name + "'");
}

FragmentKind fragment_kind_from_name(const std::string& name) {
  for (FragmentKind k : {FragmentKind::kRows, FragmentKind::kTopK, FragmentKind::kAggregate}) {
    if (fragment_kind_name(k) == name) return k;
  }
  throw Error(ErrorCode::kDecode, "unknown fragment kind '" + name + "'");
}

json op_to_json(const OperatorSpec& op) {
  json aggs = json::array();
  for (const auto& a : op.aggregates) {
    aggs.push_back({{"fn", agg_fn_name(a.fn)},
                    {"column", a.column ? json(*a.column) : json(nullptr)},
                    {"type", attr_type_name(a.type)}});
  }
  json j = {{"kind", fragment_kind_name(op.kind)},
            {"group_columns", op.group_columns},
            {"aggregates", aggs},
            {"limit", opt_u64(op.limit)},
            {"exact_distinct", op.exact_distinct},
            {"hll_precision", op.hll_precision}};
  j["sort"] = op.sort ? json{{"column", op.sort->column}, {"descending", op.sort->descending}}
                      : json(nullptr);
  return j;
}

OperatorSpec op_from_json(const json& j) {
  OperatorSpec op;
  op.kind = fragment_kind_from_name(j.at("kind").get<std::string>());
  op.group_columns = j.at("group_columns").get<std::vector<std::uint32_t>>();
  for (const auto& a : j.at("aggregates")) {
    AggCall call;
    call.fn = agg_fn_from_name(a.at("fn").get<std::string>());
    if (!a.at("column").is_null()) call.column = a.at("column").get<std::uint32_t>();
    call.type = parse_attr_type(a.at("type").get<std::string>());
    op.aggregates.push_back(call);
  }
  op.limit = opt_u64_from(j, "limit");
  op.exact_distinct = j.value("exact_distinct", false);
  op.hll_precision = j.value("hll_precision", static_cast<std::uint8_t>(HllSketch::kDefaultPrecision));
  if (j.contains("sort") && !j.at("sort").is_null()) {
    op.sort = SortSpec{j["sort"].at("column").get<std::uint32_t>(), j["sort"].at("descending").get<bool>()};
  }
  return op;
}

json row_to_json(const std::vector<Value>& row) {
  json out = json::array();
  for (const auto& v : row) out.push_back(value_to_json(v));
  return out;
}

std::vector<Value> row_from_json(const json& j) {
  std::vector<Value> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(value_from_json(v));
  return out;
}

json sketch_to_json(const HllSketch& s) {
  const auto& regs = s.registers();
  return {{"p", s.precision()},
          {"registers", base64_encode(std::string_view(reinterpret_cast<const char*>(regs.data()), regs.size()))}};
}

HllSketch sketch_from_json(const json& j) {
  const std::string raw = base64_decode(j.at("registers").get<std::string>());
  return HllSketch(j.at("p").get<std::uint8_t>(), std::vector<std::uint8_t>(raw.begin(), raw.end()));
}

json agg_state_to_json(const AggState& s) {
  json j = {{"count", s.count},
            {"int_sum", s.int_sum},
            {"float_sum", value_to_json(s.float_sum)},
            {"min", value_to_json(s.min)},
            {"max", value_to_json(s.max)}};
  if (s.sketch) j["sketch"] = sketch_to_json(*s.sketch);
  if (!s.distinct.empty()) j["distinct"] = row_to_json(s.distinct);
  return j;
}

AggState agg_state_from_json(const json& j) {
  AggState s;
  s.count = j.at("count").get<std::uint64_t>();
  s.int_sum = j.at("int_sum").get<std::int64_t>();
  const Value fs = value_from_json(j.at("float_sum"));
  if (const auto* d = std::get_if<double>(&fs)) s.float_sum = *d;
  else if (const auto* i = std::get_if<std::int64_t>(&fs)) s.float_sum = static_cast<double>(*i);
  s.min = value_from_json(j.at("min"));
  s.max = value_from_json(j.at("max"));
  if (j.contains("sketch")) s.sketch = sketch_from_json(j.at("sketch"));
  if (j.contains("distinct")) s.distinct = row_from_json(j.at("distinct"));
  return s;
}

json fragment_report_to_json(const FragmentReport& f) {
  return {{"phase", f.phase},       {"table", f.table},         {"fragment_id", f.fragment_id},
          {"ordinal", f.ordinal},   {"node", f.node},           {"latency_ms", f.latency_ms},
          {"retries", f.retries},   {"hedged", f.hedged},       {"access", access_path_name(f.access)},
          {"pm_used", f.pm_used},   {"counters", to_json(f.counters)}};
}

FragmentReport fragment_report_from_json(const json& j) {
  FragmentReport f;
  f.phase = j.at("phase").get<std::string>();
  f.table = j.at("table").get<std::string>();
  f.fragment_id = j.at("fragment_id").get<std::uint32_t>();
  f.ordinal = j.at("ordinal").get<std::uint32_t>();
  f.node = j.at("node").get<NodeId>();
  f.latency_ms = j.at("latency_ms").get<double>();
  f.retries = j.at("retries").get<std::uint32_t>();
  f.hedged = j.at("hedged").get<bool>();
  f.access = j.at("access").get<std::string>() == "index" ? AccessPath::kIndex : AccessPath::kFull;
  f.pm_used = j.at("pm_used").get<bool>();
  f.counters = counters_from_json(j.at("counters"));
  return f;
}

}  // namespace

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecode, std::string("invalid JSON: ") + e.what());
  }
}

json value_to_json(const Value& v) {
  switch (v.index()) {
    case 0: return nullptr;
    case 1: return std::get<std::int64_t>(v);
    case 2: {
      const double d = std::get<double>(v);
      if (std::isnan(d)) return {{"float", "nan"}};
      if (std::isinf(d)) return {{"float", d > 0 ? "inf" : "-inf"}};
      return d;
    }
    default: return std::get<std::string>(v);
  }
}

Value value_from_json(const json& j) {
  if (j.is_null()) return {};
  if (j.is_number_integer()) {
    if (j.is_number_unsigned()) {
      const auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        return static_cast<double>(u);
      }
      return static_cast<std::int64_t>(u);
    }
    return j.get<std::int64_t>();
  }
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object() && j.contains("float")) {
    const auto s = j.at("float").get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorCode::kDecode, "unrecognized value " + j.dump());
}

json to_json(const ScanCounters& c) {
  return {{"rows_examined", c.rows_examined}, {"rows_emitted", c.rows_emitted},
          {"bytes_located", c.bytes_located}, {"conversions", c.conversions},
          {"pm_hits", c.pm_hits},             {"pm_misses", c.pm_misses},
          {"parse_errors", c.parse_errors}};
}

ScanCounters counters_from_json(const json& j) {
  ScanCounters c;
  c.rows_examined = j.at("rows_examined").get<std::uint64_t>();
  c.rows_emitted = j.at("rows_emitted").get<std::uint64_t>();
  c.bytes_located = j.at("bytes_located").get<std::uint64_t>();
  c.conversions = j.at("conversions").get<std::uint64_t>();
  c.pm_hits = j.at("pm_hits").get<std::uint64_t>();
  c.pm_misses = j.at("pm_misses").get<std::uint64_t>();
  c.parse_errors = j.at("parse_errors").get<std::uint64_t>();
  return c;
}

json to_json(const BlockMeta& m) {
  json replicas = json::array();
  for (const auto& r : m.replicas) {
    replicas.push_back({{"node", r.node}, {"tier", storage_tier_name(r.tier)}});
  }
  json j = block_id_to_json(m.id);
  j["length"] = m.length;
  j["record_count"] = m.record_count;
  j["checksum"] = m.checksum;
  j["replicas"] = replicas;
  j["under_replicated"] = m.under_replicated;
  return j;
}

BlockMeta block_meta_from_json(const json& j) {
  BlockMeta m;
  m.id = block_id_from_json(j);
  m.length = j.at("length").get<std::uint64_t>();
  m.record_count = j.at("record_count").get<std::uint64_t>();
  m.checksum = j.at("checksum").get<std::uint64_t>();
  for (const auto& r : j.at("replicas")) {
    m.replicas.push_back({r.at("node").get<NodeId>(), r.at("tier").get<std::string>() == "memory"
                                                          ? StorageTier::kMemory
                                                          : StorageTier::kDisk});
  }
  m.under_replicated = j.value("under_replicated", false);
  return m;
}

json to_json(const Schema& s) {
  json out = json::array();
  for (const auto& a : s.attributes()) {
    json attr = {{"name", a.name}, {"type", attr_type_name(a.type)}};
    if (a.value_range) attr["range"] = {a.value_range->first, a.value_range->second};
    out.push_back(attr);
  }
  return out;
}

Schema schema_from_json(const json& j) {
  std::vector<Attribute> attrs;
  for (const auto& a : j) {
    Attribute attr;
    attr.name = a.at("name").get<std::string>();
    attr.type = parse_attr_type(a.at("type").get<std::string>());
    if (a.contains("range")) {
      attr.value_range = std::make_pair(a["range"].at(0).get<double>(), a["range"].at(1).get<double>());
    }
    attrs.push_back(std::move(attr));
  }
  return Schema(std::move(attrs));
}

json to_json(const QueryOptions& o) {
  return {{"use_index", use_index_name(o.use_index)},
          {"tau", o.tau},
          {"exact_distinct", o.exact_distinct},
          {"use_pm", o.use_pm},
          {"learn_positions", o.learn_positions},
          {"timeout_ms", o.timeout_ms}};
}

QueryOptions options_from_json(const json& j) {
  QueryOptions o;
  if (j.is_null()) return o;
  if (j.contains("use_index")) {
    const auto& u = j.at("use_index");
    o.use_index = u.is_boolean() ? (u.get<bool>() ? UseIndex::kOn : UseIndex::kOff)
                                 : parse_use_index(u.get<std::string>());
  }
  o.tau = j.value("tau", o.tau);
  o.exact_distinct = j.value("exact_distinct", o.exact_distinct);
  o.use_pm = j.value("use_pm", o.use_pm);
  o.learn_positions = j.value("learn_positions", o.learn_positions);
  o.timeout_ms = j.value("timeout_ms", o.timeout_ms);
  return o;
}

json to_json(const NodeInfo& n) {
  return {{"node_id", n.id},
          {"address", n.address},
          {"state", node_state_name(n.state)},
          {"last_heartbeat_ms", n.last_heartbeat_ms},
          {"used_bytes", n.used_bytes},
          {"capacity_bytes", opt_u64(n.capacity_bytes)},
          {"executors", n.executors}};
}

NodeInfo node_from_json(const json& j) {
  NodeInfo n;
  n.id = j.at("node_id").get<NodeId>();
  n.address = j.at("address").get<std::string>();
  const auto state = j.at("state").get<std::string>();
  n.state = state == "live" ? NodeState::kLive : state == "suspect" ? NodeState::kSuspect : NodeState::kDead;
  n.last_heartbeat_ms = j.at("last_heartbeat_ms").get<std::uint64_t>();
  n.used_bytes = j.at("used_bytes").get<std::uint64_t>();
  n.capacity_bytes = opt_u64_from(j, "capacity_bytes");
  n.executors = j.at("executors").get<std::uint32_t>();
  return n;
}

json to_json(const FragmentRequest& r) {
  json j = {{"query_id", r.query_id},
            {"fragment_id", r.fragment_id},
            {"schema", to_json(r.schema)},
            {"data_block", to_json(r.data_block)},
            {"pm_block", r.pm_block ? to_json(*r.pm_block) : json(nullptr)},
            {"vi_block", r.vi_block ? to_json(*r.vi_block) : json(nullptr)},
            {"scan", scan_to_json(r.scan)},
            {"op", op_to_json(r.op)},
            {"use_pm", r.use_pm},
            {"learn_positions", r.learn_positions}};
  if (r.join) {
    json rows = json::array();
    for (const auto& row : r.join->build_rows) rows.push_back(row_to_json(row));
    j["join"] = {{"probe_key", r.join->probe_key}, {"build_key", r.join->build_key}, {"build_rows", rows}};
  } else {
    j["join"] = nullptr;
  }
  return j;
}

FragmentRequest fragment_request_from_json(const json& j) {
  FragmentRequest r;
  r.query_id = j.at("query_id").get<std::string>();
  r.fragment_id = j.at("fragment_id").get<std::uint32_t>();
  r.schema = schema_from_json(j.at("schema"));
  r.data_block = block_meta_from_json(j.at("data_block"));
  if (!j.at("pm_block").is_null()) r.pm_block = block_meta_from_json(j.at("pm_block"));
  if (!j.at("vi_block").is_null()) r.vi_block = block_meta_from_json(j.at("vi_block"));
  r.scan = scan_from_json(j.at("scan"));
  r.op = op_from_json(j.at("op"));
  r.use_pm = j.value("use_pm", true);
  r.learn_positions = j.value("learn_positions", true);
  if (j.contains("join") && !j.at("join").is_null()) {
    JoinProbe jp;
    jp.probe_key = j["join"].at("probe_key").get<std::uint32_t>();
    jp.build_key = j["join"].at("build_key").get<std::uint32_t>();
    for (const auto& row : j["join"].at("build_rows")) jp.build_rows.push_back(row_from_json(row));
    r.join = std::move(jp);
  }
  return r;
}

json to_json(const PartialResult& p) {
  json rows = json::array();
  for (const auto& r : p.rows) {
    rows.push_back({{"pos", {r.pos.ordinal, r.pos.row, r.pos.sub}}, {"values", row_to_json(r.values)}});
  }
  json groups = json::array();
  for (const auto& g : p.groups) {
    json states = json::array();
    for (const auto& s : g.states) states.push_back(agg_state_to_json(s));
    groups.push_back({{"key", row_to_json(g.key)}, {"states", states}});
  }
  return {{"query_id", p.query_id},
          {"fragment_id", p.fragment_id},
          {"ordinal", p.ordinal},
          {"kind", fragment_kind_name(p.kind)},
          {"rows", rows},
          {"groups", groups},
          {"counters", to_json(p.counters)},
          {"access", access_path_name(p.access)},
          {"pm_used", p.pm_used}};
}

PartialResult partial_from_json(const json& j) {
  PartialResult p;
  p.query_id = j.at("query_id").get<std::string>();
  p.fragment_id = j.at("fragment_id").get<std::uint32_t>();
  p.ordinal = j.at("ordinal").get<std::uint32_t>();
  p.kind = fragment_kind_from_name(j.at("kind").get<std::string>());
  for (const auto& r : j.at("rows")) {
    PositionedRow row;
    row.pos = {r.at("pos").at(0).get<std::uint32_t>(), r.at("pos").at(1).get<std::uint64_t>(),
               r.at("pos").at(2).get<std::uint32_t>()};
    row.values = row_from_json(r.at("values"));
    p.rows.push_back(std::move(row));
  }
  for (const auto& g : j.at("groups")) {
    GroupState gs;
    gs.key = row_from_json(g.at("key"));
    for (const auto& s : g.at("states")) gs.states.push_back(agg_state_from_json(s));
    p.groups.push_back(std::move(gs));
  }
  p.counters = counters_from_json(j.at("counters"));
  p.access = j.at("access").get<std::string>() == "index" ? AccessPath::kIndex : AccessPath::kFull;
  p.pm_used = j.at("pm_used").get<bool>();
  return p;
}

json to_json(const QueryResponse& r) {
  json rows = json::array();
  for (const auto& row : r.result.rows) rows.push_back(row_to_json(row));
  json types = json::array();
  for (auto t : r.result.column_types) types.push_back(attr_type_name(t));
  json fragments = json::array();
  for (const auto& f : r.report.fragments) fragments.push_back(fragment_report_to_json(f));
  return {{"columns", r.result.columns},
          {"column_types", types},
          {"rows", rows},
          {"approximate", r.result.approximate},
          {"report",
           {{"query_id", r.report.query_id},
            {"latency_ms", r.report.latency_ms},
            {"retries", r.report.retries},
            {"hedges", r.report.hedges},
            {"duplicates_dropped", r.report.duplicates_dropped},
            {"counters", to_json(r.report.counters)},
            {"fragments", fragments},
            {"plan", r.report.plan}}}};
}

QueryResponse response_from_json(const json& j) {
  QueryResponse r;
  r.result.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& t : j.at("column_types")) r.result.column_types.push_back(parse_attr_type(t.get<std::string>()));
  for (const auto& row : j.at("rows")) r.result.rows.push_back(row_from_json(row));
  r.result.approximate = j.value("approximate", false);
  const auto& rep = j.at("report");
  r.report.query_id = rep.at("query_id").get<std::string>();
  r.report.latency_ms = rep.at("latency_ms").get<double>();
  r.report.retries = rep.at("retries").get<std::uint32_t>();
  r.report.hedges = rep.at("hedges").get<std::uint32_t>();
  r.report.duplicates_dropped = rep.at("duplicates_dropped").get<std::uint32_t>();
  r.report.counters = counters_from_json(rep.at("counters"));
  for (const auto& f : rep.at("fragments")) r.report.fragments.push_back(fragment_report_from_json(f));
  r.report.plan = rep.at("plan").get<std::vector<std::string>>();
  return r;
}

json table_to_json(const TableDescriptor& t) {
  json blocks = json::array();
  for (std::size_t i = 0; i < t.data_blocks.size(); ++i) {
    json b = to_json(t.data_blocks[i]);
    if (const auto* pm = t.pm_for(i)) b["pm"] = to_json(*pm);
    if (const auto* vi = t.vi_for(i)) b["vi"] = to_json(*vi);
    if (i < t.stats_blocks.size()) b["stats"] = to_json(t.stats_blocks[i]);
    blocks.push_back(std::move(b));
  }
  json key_attrs = json::array();
  for (auto a : t.key_attrs) key_attrs.push_back(t.schema[a].name);
  json j = {{"name", t.name},
            {"schema", to_json(t.schema)},
            {"record_count", t.record_count()},
            {"bytes", t.byte_count()},
            {"key_attrs", key_attrs},
            {"pm_sampled", t.pm_sampled},
            {"has_pm", t.has_pm()},
            {"replication", t.replication},
            {"target_block_size", t.target_block_size},
            {"created_ms", t.created_ms},
            {"blocks", blocks}};
  if (t.stats) {
    json attrs = json::array();
    for (const auto& a : t.stats->attrs) {
      attrs.push_back({{"attr", t.schema[a.attr].name}, {"distinct_estimate", a.sketch.estimate()}});
    }
    j["stats"] = {{"record_count", t.stats->record_count}, {"attrs", attrs}};
  } else {
    j["stats"] = nullptr;
  }
  return j;
}

std::string encode_fragment_request(const FragmentRequest& request) { return to_json(request).dump(); }

FragmentRequest decode_fragment_request(std::string_view text) {
  return guarded([&] { return fragment_request_from_json(parse(text)); });
}

std::string encode_partial_result(const PartialResult& partial) { return to_json(partial).dump(); }

PartialResult decode_partial_result(std::string_view text) {
  return guarded([&] { return partial_from_json(parse(text)); });
}

std::string encode_query_request(std::string_view sql, const QueryOptions& options) {
  return json{{"sql", sql}, {"options", to_json(options)}}.dump();
}

std::pair<std::string, QueryOptions> decode_query_request(std::string_view text) {
  return guarded([&] {
    const json j = parse(text);
    return std::make_pair(j.at("sql").get<std::string>(),
                          options_from_json(j.contains("options") ? j.at("options") : json(nullptr)));
  });
}

std::string encode_query_response(const QueryResponse& response) { return to_json(response).dump(); }

QueryResponse decode_query_response(std::string_view text) {
  return guarded([&] { return response_from_json(parse(text)); });
}

std::string encode_table(const TableDescriptor& table) { return table_to_json(table).dump(); }

std::string encode_table_list(const std::vector<std::shared_ptr<const TableDescriptor>>& tables) {
  json out = json::array();
  for (const auto& t : tables) {
    out.push_back({{"name", t->name},
                   {"record_count", t->record_count()},
                   {"blocks", t->data_blocks.size()},
                   {"attrs", t->schema.size()},
                   {"has_pm", t->has_pm()},
                   {"key_attrs", t->key_attrs},
                   {"replication", t->replication}});
  }
  return json{{"tables", out}}.dump();
}

std::string encode_nodes(const std::vector<NodeInfo>& nodes) {
  json out = json::array();
  for (const auto& n : nodes) out.push_back(to_json(n));
  return json{{"nodes", out}}.dump();
}

std::vector<NodeInfo> decode_nodes(std::string_view text) {
  return guarded([&] {
    std::vector<NodeInfo> out;
    const json j = parse(text);
    for (const auto& n : j.at("nodes")) out.push_back(node_from_json(n));
    return out;
  });
}

std::string encode_error(const Error& error) { return encode_error(error.code(), error.what()); }

std::string encode_error(ErrorCode code, std::string_view message) {
  return json{{"error", {{"code", error_code_name(code)}, {"message", message}}}}.dump();
}

Error decode_error(std::string_view text) {
  try {
    const json j = json::parse(text);
    return Error(error_code_from_name(j.at("error").at("code").get<std::string>()),
                 j.at("error").at("message").get<std::string>());
  } catch (const std::exception&) {
    return Error(ErrorCode::kInternal, "unexpected response: " + std::string(text.substr(0, 200)));
  }
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kSyntax:
    case ErrorCode::kUnsupported:
    case ErrorCode::kPlan:
    case ErrorCode::kDecode: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kAlreadyExists:
    case ErrorCode::kPrecondition: return 409;
    case ErrorCode::kNotHere:
    case ErrorCode::kUnavailable: return 503;
    case ErrorCode::kStorageFull: return 507;
    default: return 500;
  }
}

}  // namespace rawdb::wire
