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

#include "rawdb/planner.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "rawdb/error.h"

namespace rawdb {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool parse_bool(std::string_view name, std::string_view value) {
  const std::string v = lower(value);
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw_error(ErrorCode::kInvalidArgument,
              fmt::format("setting {} expects on/off, got '{}'", name, value));
}

[[noreturn]] void plan_error(const SourcePos& pos, const std::string& what) {
  throw_error(ErrorCode::kPlan, fmt::format("{} (line {}, column {})", what, pos.line, pos.column));
}

std::string format_comparison(const Schema& schema, const Comparison& c) {
  const std::string lit = std::holds_alternative<std::string>(c.literal)
                              ? "'" + std::get<std::string>(c.literal) + "'"
                              : value_to_string(c.literal);
  return fmt::format("{} {} {}", schema[c.attr].name, compare_op_symbol(c.op), lit);
}

struct Bound {
  int side = 0;
  std::uint32_t attr = 0;
  auto operator<=>(const Bound&) const = default;
};

struct BoundAgg {
  AggFn fn = AggFn::kCount;
  std::optional<Bound> arg;
  bool operator==(const BoundAgg&) const = default;
};

class Binder {
 public:
  Binder(const SelectQuery& q, const TableLookup& lookup) : q_(q) {
    tables_[0] = fetch(q.table, lookup);
    if (q.join) {
      if (lower(q.join->table) == lower(q.table)) {
        throw_error(ErrorCode::kUnsupported, "self-join of table '" + q.table + "'");
      }
      tables_[1] = fetch(q.join->table, lookup);
    }
  }

  const std::shared_ptr<const TableDescriptor>& table(int side) const { return tables_[side]; }
  bool is_join() const { return tables_[1] != nullptr; }

  Bound resolve(const ColumnRef& ref) const {
    if (!ref.table.empty()) {
      for (int s = 0; s < 2; ++s) {
        if (tables_[s] && tables_[s]->name == ref.table) {
          auto idx = tables_[s]->schema.index_of(ref.name);
          if (!idx) plan_error(ref.pos, "unknown column '" + ref.to_string() + "'");
          return {s, *idx};
        }
      }
      plan_error(ref.pos, "unknown table qualifier '" + ref.table + "'");
    }
    std::optional<Bound> found;
    for (int s = 0; s < 2; ++s) {
      if (!tables_[s]) continue;
      if (auto idx = tables_[s]->schema.index_of(ref.name)) {
        if (found) plan_error(ref.pos, "ambiguous column '" + ref.name + "'");
        found = Bound{s, *idx};
      }
    }
    if (!found) plan_error(ref.pos, "unknown column '" + ref.name + "'");
    return *found;
  }

  const Attribute& attribute(const Bound& b) const { return tables_[b.side]->schema[b.attr]; }

  std::string display(const Bound& b) const {
    return is_join() ? tables_[b.side]->name + "." + attribute(b).name : attribute(b).name;
  }

 private:
  static std::shared_ptr<const TableDescriptor> fetch(const std::string& name,
                                                      const TableLookup& lookup) {
    auto t = lookup(name);
    if (!t) throw_error(ErrorCode::kPlan, "unknown table '" + name + "'");
    return t;
  }

  const SelectQuery& q_;
  std::shared_ptr<const TableDescriptor> tables_[2];
};

AttrType agg_result_type(AggFn fn, AttrType input) {
  switch (fn) {
    case AggFn::kCount:
    case AggFn::kCountDistinct: return AttrType::kInt64;
    case AggFn::kAvg: return AttrType::kFloat64;
    default: return input;
  }
}

TableAccessPlan plan_access(const std::shared_ptr<const TableDescriptor>& table,
                            std::vector<Comparison> predicate, std::vector<std::uint32_t> projection,
                            const QueryOptions& options) {
  TableAccessPlan a;
  a.table = table;
  a.predicate = std::move(predicate);
  a.projection = std::move(projection);
  const TableStatistics* stats = table->stats ? &*table->stats : nullptr;

  std::map<std::uint32_t, std::vector<Comparison>> by_attr;
  for (const auto& c : a.predicate) by_attr[c.attr].push_back(c);

  std::optional<std::uint32_t> best;
  SelectivityEstimate best_est{2.0, "none"};
  double combined = 1.0;
  std::string combined_source = "none";
  for (const auto& [attr, conds] : by_attr) {
    const auto est = estimate_selectivity(table->schema[attr], attr, conds, stats);
    combined *= est.value;
    combined_source = combined_source == "none" ? est.source : combined_source;
    const bool eligible =
        table->has_vi_on(attr) && is_numeric(table->schema[attr].type) &&
        std::any_of(conds.begin(), conds.end(), [](const Comparison& c) { return c.op != CompareOp::kNe; });
    if (!eligible) continue;
    a.vi_candidates.push_back(attr);
    if (est.value < best_est.value) {
      best = attr;
      best_est = est;
    }
  }
  if (best) {
    a.selectivity = best_est.value;
    a.selectivity_source = best_est.source;
    const bool use = options.use_index == UseIndex::kOn ||
                     (options.use_index == UseIndex::kAuto && best_est.value < options.tau);
    if (use) {
      a.access = AccessPath::kIndex;
      a.index_attr = best;
    }
  } else if (!by_attr.empty()) {
    a.selectivity = combined;
    a.selectivity_source = combined_source;
  }
  return a;
}

std::vector<std::uint32_t> sorted_unique(std::set<std::uint32_t> s) { return {s.begin(), s.end()}; }

}  // namespace

std::string_view use_index_name(UseIndex mode) {
  switch (mode) {
    case UseIndex::kAuto: return "auto";
    case UseIndex::kOn: return "on";
    case UseIndex::kOff: return "off";
  }
  return "auto";
}

UseIndex parse_use_index(std::string_view text) {
  const std::string v = lower(text);
  if (v == "auto") return UseIndex::kAuto;
  if (v == "on" || v == "true" || v == "1") return UseIndex::kOn;
  if (v == "off" || v == "false" || v == "0") return UseIndex::kOff;
  throw_error(ErrorCode::kInvalidArgument, "use_index expects auto, on or off, got '" + std::string(text) + "'");
}

void QueryOptions::apply(const SetStatement& set) {
  const std::string name = lower(set.name);
  if (name == "use_index") {
    use_index = parse_use_index(set.value);
  } else if (name == "tau") {
    double v = 0;
    auto [ptr, ec] = std::from_chars(set.value.data(), set.value.data() + set.value.size(), v);
    if (ec != std::errc() || ptr != set.value.data() + set.value.size() || !(v >= 0 && v <= 1)) {
      throw_error(ErrorCode::kInvalidArgument, "tau expects a number in [0, 1]");
    }
    tau = v;
  } else if (name == "exact_distinct") {
    exact_distinct = parse_bool(name, set.value);
  } else if (name == "use_pm") {
    use_pm = parse_bool(name, set.value);
  } else if (name == "learn_positions") {
    learn_positions = parse_bool(name, set.value);
  } else if (name == "timeout_ms") {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(set.value.data(), set.value.data() + set.value.size(), v);
    if (ec != std::errc() || ptr != set.value.data() + set.value.size()) {
      throw_error(ErrorCode::kInvalidArgument, "timeout_ms expects a non-negative integer");
    }
    timeout_ms = v;
  } else {
    throw_error(ErrorCode::kInvalidArgument, "unknown setting '" + set.name + "'");
  }
}

std::string_view fragment_kind_name(FragmentKind kind) {
  switch (kind) {
    case FragmentKind::kRows: return "rows";
    case FragmentKind::kTopK: return "topk";
    case FragmentKind::kAggregate: return "aggregate";
  }
  return "rows";
}

SelectivityEstimate estimate_selectivity(const Attribute& attr, std::uint32_t attr_index,
                                         const std::vector<Comparison>& conditions,
                                         const TableStatistics* stats) {
  bool has_eq = false, has_range = false, only_ne = true;
  for (const auto& c : conditions) {
    if (c.op == CompareOp::kEq) has_eq = true;
    if (c.op != CompareOp::kEq && c.op != CompareOp::kNe) has_range = true;
    if (c.op != CompareOp::kNe) only_ne = false;
  }
  if (conditions.empty() || only_ne) return {1.0, "none"};
  if (has_eq) {
    if (stats) {
      if (auto ndv = stats->distinct_estimate(attr_index); ndv && *ndv >= 1) {
        return {1.0 / *ndv, "ndv"};
      }
    }
    if (attr.value_range && attr.value_range->second > attr.value_range->first) {
      return {1.0 / (attr.value_range->second - attr.value_range->first), "range"};
    }
    return {kDefaultSelectivity, "default"};
  }
  if (has_range && attr.value_range && attr.value_range->second > attr.value_range->first) {
    const double min = attr.value_range->first, max = attr.value_range->second;
    double lo = min, hi = max;
    for (const auto& c : conditions) {
      double v;
      if (const auto* i = std::get_if<std::int64_t>(&c.literal)) v = static_cast<double>(*i);
      else if (const auto* d = std::get_if<double>(&c.literal)) v = *d;
      else continue;
      switch (c.op) {
        case CompareOp::kLt:
        case CompareOp::kLe: hi = std::min(hi, v); break;
        case CompareOp::kGt:
        case CompareOp::kGe: lo = std::max(lo, v); break;
        default: break;
      }
    }
    return {std::clamp((hi - lo) / (max - min), 0.0, 1.0), "range"};
  }
  return {kDefaultSelectivity, "default"};
}

PhysicalPlan plan_query(const SelectQuery& q, const TableLookup& lookup, const QueryOptions& options) {
  Binder binder(q, lookup);
  PhysicalPlan plan;
  plan.options = options;

  struct OutItem {
    bool is_agg = false;
    Bound col;
    BoundAgg agg;
    std::string name;
  };
  std::vector<OutItem> items;
  for (const auto& item : q.items) {
    switch (item.kind) {
      case SelectItem::Kind::kStar:
        for (int s = 0; s < (binder.is_join() ? 2 : 1); ++s) {
          const auto& schema = binder.table(s)->schema;
          for (std::uint32_t a = 0; a < schema.size(); ++a) {
            OutItem o;
            o.col = {s, a};
            o.name = binder.display(o.col);
            items.push_back(std::move(o));
          }
        }
        break;
      case SelectItem::Kind::kColumn: {
        OutItem o;
        o.col = binder.resolve(item.column);
        o.name = item.alias.empty() ? item.column.to_string() : item.alias;
        items.push_back(std::move(o));
        break;
      }
      case SelectItem::Kind::kAggregate: {
        OutItem o;
        o.is_agg = true;
        o.agg.fn = item.aggregate.fn;
        if (item.aggregate.arg) {
          o.agg.arg = binder.resolve(*item.aggregate.arg);
          const auto type = binder.attribute(*o.agg.arg).type;
          if ((o.agg.fn == AggFn::kSum || o.agg.fn == AggFn::kAvg) && !is_numeric(type)) {
            plan_error(item.aggregate.arg->pos,
                       std::string(agg_fn_name(o.agg.fn)) + " needs a numeric attribute");
          }
        }
        o.name = item.alias.empty() ? item.aggregate.to_string() : item.alias;
        items.push_back(std::move(o));
        break;
      }
    }
  }

  // WHERE, split by side.
  std::vector<Comparison> preds[2];
  for (const auto& cond : q.where) {
    const Bound b = binder.resolve(cond.column);
    const auto type = binder.attribute(b).type;
    const bool text_lit = std::holds_alternative<std::string>(cond.literal);
    if ((type == AttrType::kText) != text_lit) {
      plan_error(cond.column.pos, "type mismatch comparing " + cond.column.to_string() + " (" +
                                      std::string(attr_type_name(type)) + ") with " +
                                      value_to_string(cond.literal));
    }
    preds[b.side].push_back({b.attr, cond.op, cond.literal});
  }

  std::optional<Bound> join_keys[2];
  if (binder.is_join()) {
    const Bound l = binder.resolve(q.join->left);
    const Bound r = binder.resolve(q.join->right);
    if (l.side == r.side) plan_error(q.join->left.pos, "join condition must relate the two tables");
    join_keys[l.side] = l;
    join_keys[r.side] = r;
    for (int s = 0; s < 2; ++s) {
      if (!is_numeric(binder.attribute(*join_keys[s]).type)) {
        plan_error(q.join->left.pos, "join keys must be numeric");
      }
    }
  }

  const bool agg_mode = !q.group_by.empty() ||
                        std::any_of(items.begin(), items.end(), [](const OutItem& o) { return o.is_agg; });

  std::vector<Bound> groups;
  for (const auto& g : q.group_by) {
    const Bound b = binder.resolve(g);
    if (std::find(groups.begin(), groups.end(), b) == groups.end()) groups.push_back(b);
  }
  std::vector<BoundAgg> aggs;
  auto agg_index = [&](const BoundAgg& a) {
    auto it = std::find(aggs.begin(), aggs.end(), a);
    if (it != aggs.end()) return static_cast<std::uint32_t>(it - aggs.begin());
    aggs.push_back(a);
    return static_cast<std::uint32_t>(aggs.size() - 1);
  };

  // Final-row index of each output item (resolved after projections for row
  // mode).
  std::vector<std::uint32_t> agg_out(items.size(), 0);
  if (agg_mode) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto& o = items[i];
      if (o.is_agg) {
        agg_out[i] = static_cast<std::uint32_t>(groups.size()) + agg_index(o.agg);
      } else {
        auto it = std::find(groups.begin(), groups.end(), o.col);
        if (it == groups.end()) {
          const auto& src = q.items.size() == items.size() ? q.items[i].column : ColumnRef{};
          plan_error(src.pos, "column '" + o.name + "' must appear in GROUP BY or an aggregate");
        }
        agg_out[i] = static_cast<std::uint32_t>(it - groups.begin());
      }
    }
  }

  // ORDER BY.
  std::optional<Bound> order_col;
  std::optional<std::uint32_t> order_final;
  if (q.order_by) {
    const auto& key = q.order_by->key;
    std::optional<std::size_t> alias_item;
    const auto* alias_ref = std::get_if<ColumnRef>(&key);
    if (alias_ref && alias_ref->table.empty() && q.items.size() == items.size()) {
      const auto* ref = alias_ref;
      for (std::size_t i = 0; i < q.items.size() && i < items.size(); ++i) {
        if (!q.items[i].alias.empty() && q.items[i].alias == ref->name) alias_item = i;
      }
    }
    if (agg_mode) {
      if (alias_item) {
        order_final = agg_out[*alias_item];
      } else if (const auto* ref = std::get_if<ColumnRef>(&key)) {
        const Bound b = binder.resolve(*ref);
        auto it = std::find(groups.begin(), groups.end(), b);
        if (it == groups.end()) plan_error(ref->pos, "ORDER BY column must appear in GROUP BY");
        order_final = static_cast<std::uint32_t>(it - groups.begin());
      } else {
        const auto& agg = std::get<Aggregate>(key);
        BoundAgg b{agg.fn, std::nullopt};
        if (agg.arg) b.arg = binder.resolve(*agg.arg);
        order_final = static_cast<std::uint32_t>(groups.size()) + agg_index(b);
      }
    } else {
      if (alias_item) {
        if (items[*alias_item].is_agg) throw_error(ErrorCode::kPlan, "aggregate in ORDER BY requires aggregation");
        order_col = items[*alias_item].col;
      } else if (const auto* ref = std::get_if<ColumnRef>(&key)) {
        order_col = binder.resolve(*ref);
      } else {
        throw_error(ErrorCode::kPlan, "aggregate in ORDER BY requires aggregation");
      }
    }
  }

  // Projections.
  std::set<std::uint32_t> need[2];
  if (agg_mode) {
    for (const auto& g : groups) need[g.side].insert(g.attr);
    for (const auto& a : aggs) {
      if (a.arg) need[a.arg->side].insert(a.arg->attr);
    }
  } else {
    for (const auto& o : items) need[o.col.side].insert(o.col.attr);
    if (order_col) need[order_col->side].insert(order_col->attr);
  }
  for (int s = 0; s < 2; ++s) {
    if (join_keys[s]) need[s].insert(join_keys[s]->attr);
  }

  // Build side: the smaller cardinality, then the smaller join-key distinct
  // count, then the right table.
  int probe_side = 0;
  if (binder.is_join()) {
    auto card = [&](int s) {
      const auto& t = *binder.table(s);
      return t.stats ? t.stats->record_count : t.record_count();
    };
    auto ndv = [&](int s) -> std::optional<double> {
      const auto& t = *binder.table(s);
      if (!t.stats) return std::nullopt;
      return t.stats->distinct_estimate(join_keys[s]->attr);
    };
    const auto c0 = card(0), c1 = card(1);
    int build_side = 1;
    if (c0 != c1) {
      build_side = c0 < c1 ? 0 : 1;
      plan.build_reason = fmt::format("record_count {} vs {}", std::min(c0, c1), std::max(c0, c1));
    } else {
      const auto n0 = ndv(0), n1 = ndv(1);
      if (n0 && n1 && *n0 != *n1) {
        build_side = *n0 < *n1 ? 0 : 1;
        plan.build_reason = fmt::format("equal record_count {}; join-key distinct {:.0f} vs {:.0f}",
                                        c0, std::min(*n0, *n1), std::max(*n0, *n1));
      } else {
        plan.build_reason = fmt::format("equal record_count {}; right table by default", c0);
      }
    }
    probe_side = 1 - build_side;
  }

  const std::vector<std::uint32_t> proj_probe = sorted_unique(need[probe_side]);
  const std::vector<std::uint32_t> proj_build =
      binder.is_join() ? sorted_unique(need[1 - probe_side]) : std::vector<std::uint32_t>{};
  auto row_index = [&](const Bound& b) {
    const auto& proj = b.side == probe_side ? proj_probe : proj_build;
    const auto pos = static_cast<std::uint32_t>(std::find(proj.begin(), proj.end(), b.attr) - proj.begin());
    return b.side == probe_side ? pos : static_cast<std::uint32_t>(proj_probe.size()) + pos;
  };

  plan.probe = plan_access(binder.table(probe_side), preds[probe_side], proj_probe, options);
  if (binder.is_join()) {
    plan.build = plan_access(binder.table(1 - probe_side), preds[1 - probe_side], proj_build, options);
    const auto pk = row_index(*join_keys[probe_side]);
    const auto bk = row_index(*join_keys[1 - probe_side]);
    plan.probe_key = pk;
    plan.build_key = bk - static_cast<std::uint32_t>(proj_probe.size());
  }

  plan.op.exact_distinct = options.exact_distinct;
  plan.limit = q.limit;
  for (const auto& o : items) {
    plan.columns.push_back(o.name);
    if (o.is_agg) {
      const auto input = o.agg.arg ? binder.attribute(*o.agg.arg).type : AttrType::kInt64;
      plan.column_types.push_back(agg_result_type(o.agg.fn, input));
    } else {
      plan.column_types.push_back(binder.attribute(o.col).type);
    }
  }
  if (agg_mode) {
    plan.op.kind = FragmentKind::kAggregate;
    for (const auto& g : groups) plan.op.group_columns.push_back(row_index(g));
    for (const auto& a : aggs) {
      AggCall call;
      call.fn = a.fn;
      if (a.arg) {
        call.column = row_index(*a.arg);
        call.type = binder.attribute(*a.arg).type;
      }
      plan.op.aggregates.push_back(call);
      if (a.fn == AggFn::kCountDistinct && !options.exact_distinct) plan.approximate = true;
    }
    plan.output_map = agg_out;
    if (order_final) plan.final_sort = SortSpec{*order_final, q.order_by->descending};
  } else {
    for (const auto& o : items) plan.output_map.push_back(row_index(o.col));
    if (order_col) {
      const SortSpec sort{row_index(*order_col), q.order_by->descending};
      plan.final_sort = sort;
      if (q.limit) {
        plan.op.kind = FragmentKind::kTopK;
        plan.op.sort = sort;
        plan.op.limit = q.limit;
      }
    } else if (q.limit) {
      plan.op.limit = q.limit;
    }
  }
  return plan;
}

std::vector<FragmentRequest> make_fragments(const TableAccessPlan& access, const OperatorSpec& op,
                                            const std::string& query_id, const QueryOptions& options,
                                            const std::optional<JoinProbe>& join) {
  std::vector<FragmentRequest> out;
  const auto& blocks = access.table->data_blocks;
  out.reserve(blocks.size());
  for (std::uint32_t i = 0; i < blocks.size(); ++i) {
    FragmentRequest f;
    f.query_id = query_id;
    f.fragment_id = i;
    f.schema = access.table->schema;
    f.data_block = blocks[i];
    if (const BlockMeta* pm = access.table->pm_for(i)) f.pm_block = *pm;
    if (const BlockMeta* vi = access.table->vi_for(i)) f.vi_block = *vi;
    f.scan.block = blocks[i].id;
    f.scan.projection = access.projection;
    f.scan.predicate = access.predicate;
    f.scan.access = access.access;
    f.scan.index_attr = access.index_attr.value_or(0);
    if (op.kind == FragmentKind::kRows && op.limit && !join) f.scan.limit = op.limit;
    f.op = op;
    f.join = join;
    f.use_pm = options.use_pm;
    f.learn_positions = options.use_pm && options.learn_positions;
    out.push_back(std::move(f));
  }
  return out;
}

OperatorSpec build_phase_operator() { return OperatorSpec{}; }

std::vector<std::string> explain_plan(const PhysicalPlan& plan) {
  std::vector<std::string> lines;
  lines.push_back(fmt::format("operator: {}{}", fragment_kind_name(plan.op.kind),
                              plan.approximate ? " (approximate distinct)" : ""));
  auto describe = [&](const TableAccessPlan& a, std::string_view role) {
    const auto& t = *a.table;
    std::string candidates;
    for (auto attr : a.vi_candidates) {
      if (!candidates.empty()) candidates += ",";
      candidates += t.schema[attr].name;
    }
    lines.push_back(fmt::format(
        "table {}{}: access={}{} est_selectivity={:.6g} ({}) tau={} use_index={} vi_candidates=[{}]",
        t.name, role, access_path_name(a.access),
        a.index_attr ? " index_attr=" + t.schema[*a.index_attr].name : std::string(), a.selectivity,
        a.selectivity_source, plan.options.tau, use_index_name(plan.options.use_index), candidates));
    lines.push_back(fmt::format("  fragments={} records={} pm={}", t.data_blocks.size(),
                                t.record_count(), t.has_pm() && plan.options.use_pm ? "yes" : "no"));
    if (!a.predicate.empty()) {
      std::string pred;
      for (const auto& c : a.predicate) {
        if (!pred.empty()) pred += " AND ";
        pred += format_comparison(t.schema, c);
      }
      lines.push_back("  predicate: " + pred);
    }
  };
  describe(plan.probe, plan.build ? " (probe)" : "");
  if (plan.build) {
    describe(*plan.build, " (build)");
    lines.push_back(fmt::format("join: broadcast hash, build={} probe={} ({})", plan.build->table->name,
                                plan.probe.table->name, plan.build_reason));
  }
  return lines;
}

}  // namespace rawdb
