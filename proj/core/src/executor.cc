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

#include "rawdb/executor.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rawdb/error.h"

namespace rawdb {

namespace {

bool less_value(const Value& a, const Value& b) { return total_compare(a, b) < 0; }

bool strictly_sorted(const std::vector<Value>& v) {
  return std::adjacent_find(v.begin(), v.end(),
                            [](const Value& a, const Value& b) { return total_compare(a, b) >= 0; }) == v.end();
}

void sort_unique(std::vector<Value>& v) {
  if (strictly_sorted(v)) return;
  std::sort(v.begin(), v.end(), less_value);
  v.erase(std::unique(v.begin(), v.end(), [](const Value& a, const Value& b) { return total_compare(a, b) == 0; }),
          v.end());
}

}  // namespace

bool RowLess::operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int c = total_compare(a[i], b[i]);
    if (c != 0) return c < 0;
  }
  return a.size() < b.size();
}

bool ranks_before(const SortSpec& sort, const PositionedRow& a, const PositionedRow& b) {
  const int c = total_compare(a.values[sort.column], b.values[sort.column]);
  if (c != 0) return sort.descending ? c > 0 : c < 0;
  return a.pos < b.pos;
}

void AggState::update(const AggCall& call, const Value& v, bool exact_distinct,
                      std::uint8_t precision) {
  switch (call.fn) {
    case AggFn::kCount:
      ++count;
      return;
    case AggFn::kSum:
    case AggFn::kAvg:
      ++count;
      if (const auto* i = std::get_if<std::int64_t>(&v)) {
        if (__builtin_add_overflow(int_sum, *i, &int_sum)) {
          throw_error(ErrorCode::kInvalidArgument, "integer overflow in sum");
        }
      } else if (const auto* d = std::get_if<double>(&v)) {
        float_sum += *d;
      }
      return;
    case AggFn::kMin:
      ++count;
      if (is_null(min) || less_value(v, min)) min = v;
      return;
    case AggFn::kMax:
      ++count;
      if (is_null(max) || less_value(max, v)) max = v;
      return;
    case AggFn::kCountDistinct:
      ++count;
      if (exact_distinct) {
        distinct.push_back(v);
      } else {
        if (!sketch) sketch.emplace(precision);
        sketch->insert(value_to_string(v));
      }
      return;
  }
}

void AggState::merge(const AggCall& call, const AggState& o) {
  count += o.count;
  switch (call.fn) {
    case AggFn::kCount:
      return;
    case AggFn::kSum:
    case AggFn::kAvg:
      if (__builtin_add_overflow(int_sum, o.int_sum, &int_sum)) {
        throw_error(ErrorCode::kInvalidArgument, "integer overflow in sum");
      }
      float_sum += o.float_sum;
      return;
    case AggFn::kMin:
      if (!is_null(o.min) && (is_null(min) || less_value(o.min, min))) min = o.min;
      return;
    case AggFn::kMax:
      if (!is_null(o.max) && (is_null(max) || less_value(max, o.max))) max = o.max;
      return;
    case AggFn::kCountDistinct: {
      if (o.sketch) {
        if (sketch) sketch->merge(*o.sketch);
        else sketch = o.sketch;
      }
      if (!o.distinct.empty()) {
        sort_unique(distinct);
        std::vector<Value> other_copy;
        const std::vector<Value>* other = &o.distinct;
        if (!strictly_sorted(o.distinct)) {
          other_copy = o.distinct;
          sort_unique(other_copy);
          other = &other_copy;
        }
        std::vector<Value> merged;
        merged.reserve(distinct.size() + other->size());
        std::set_union(distinct.begin(), distinct.end(), other->begin(), other->end(),
                       std::back_inserter(merged), less_value);
        distinct = std::move(merged);
      }
      return;
    }
  }
}

Value AggState::finalize(const AggCall& call) const {
  switch (call.fn) {
    case AggFn::kCount:
      return static_cast<std::int64_t>(count);
    case AggFn::kCountDistinct:
      if (sketch) return static_cast<std::int64_t>(std::llround(sketch->estimate()));
      if (strictly_sorted(distinct)) return static_cast<std::int64_t>(distinct.size());
      {
        auto copy = distinct;
        sort_unique(copy);
        return static_cast<std::int64_t>(copy.size());
      }
    case AggFn::kSum:
      if (count == 0) return {};
      if (call.type == AttrType::kInt64) return int_sum;
      return float_sum;
    case AggFn::kAvg:
      if (count == 0) return {};
      return (call.type == AttrType::kInt64 ? static_cast<double>(int_sum) : float_sum) /
             static_cast<double>(count);
    case AggFn::kMin:
      return min;
    case AggFn::kMax:
      return max;
  }
  return {};
}

PartialResult execute_fragment(const FragmentRequest& req, BlockScanner& scanner,
                               const std::vector<VerticalIndex>* indexes) {
  PartialResult pr;
  pr.query_id = req.query_id;
  pr.fragment_id = req.fragment_id;
  pr.ordinal = req.scan.block.ordinal;
  pr.kind = req.op.kind;
  pr.pm_used = scanner.has_pm();
  const OperatorSpec& op = req.op;
  const std::uint32_t ordinal = req.scan.block.ordinal;

  std::map<Value, std::vector<std::uint32_t>, ValueLess> build;
  if (req.join) {
    for (std::uint32_t b = 0; b < req.join->build_rows.size(); ++b) {
      const Value& k = req.join->build_rows[b].at(req.join->build_key);
      if (is_null(k)) continue;
      if (const auto* d = std::get_if<double>(&k); d && std::isnan(*d)) continue;
      build[k].push_back(b);
    }
  }

  std::map<std::vector<Value>, std::vector<AggState>, RowLess> groups;
  std::vector<PositionedRow> heap;
  const std::uint64_t k = op.limit.value_or(UINT64_MAX);
  if (op.kind == FragmentKind::kTopK && !op.sort) {
    throw_error(ErrorCode::kInvalidArgument, "top-k fragment without a sort key");
  }

  auto consume = [&](RowPos pos, std::vector<Value>&& values) -> bool {
    switch (op.kind) {
      case FragmentKind::kRows:
        pr.rows.push_back({pos, std::move(values)});
        return pr.rows.size() < k;
      case FragmentKind::kTopK: {
        if (k == 0) return false;
        PositionedRow row{pos, std::move(values)};
        auto cmp = [&](const PositionedRow& a, const PositionedRow& b) {
          return ranks_before(*op.sort, a, b);
        };
        if (heap.size() < k) {
          heap.push_back(std::move(row));
          std::push_heap(heap.begin(), heap.end(), cmp);
        } else if (cmp(row, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), cmp);
          heap.back() = std::move(row);
          std::push_heap(heap.begin(), heap.end(), cmp);
        }
        return true;
      }
      case FragmentKind::kAggregate: {
        std::vector<Value> key;
        key.reserve(op.group_columns.size());
        for (auto c : op.group_columns) key.push_back(values.at(c));
        auto it = groups.find(key);
        if (it == groups.end()) {
          it = groups.emplace(std::move(key), std::vector<AggState>(op.aggregates.size())).first;
        }
        for (std::size_t a = 0; a < op.aggregates.size(); ++a) {
          const AggCall& call = op.aggregates[a];
          static const Value kNone;
          it->second[a].update(call, call.column ? values.at(*call.column) : kNone, op.exact_distinct,
                               op.hll_precision);
        }
        return true;
      }
    }
    return true;
  };

  auto sink = [&](ScanRow&& r) -> bool {
    if (!req.join) return consume({ordinal, r.record, 0}, std::move(r.values));
    const Value& key = r.values.at(req.join->probe_key);
    auto it = build.find(key);
    if (it == build.end()) return true;
    if (const auto* d = std::get_if<double>(&key); d && std::isnan(*d)) return true;
    for (std::uint32_t b : it->second) {
      std::vector<Value> row = r.values;
      const auto& extra = req.join->build_rows[b];
      row.insert(row.end(), extra.begin(), extra.end());
      if (!consume({ordinal, r.record, b}, std::move(row))) return false;
    }
    return true;
  };

  try {
    const VerticalIndex* vi = nullptr;
    if (req.scan.access == AccessPath::kIndex && indexes) {
      for (const auto& candidate : *indexes) {
        if (candidate.key_attr() == req.scan.index_attr) vi = &candidate;
      }
    }
    if (req.scan.access == AccessPath::kIndex && !vi) {
      spdlog::warn("block {}: no vertical index on attribute {}; scanning fully",
                   req.scan.block.to_string(), req.scan.index_attr);
    }
    bool done = false;
    if (vi) {
      try {
        pr.counters = scanner.index_scan(req.scan, *vi, sink);
        pr.access = AccessPath::kIndex;
        done = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMetadataInconsistency) throw;
        spdlog::warn("block {}: {}; scanning fully", req.scan.block.to_string(), e.what());
      }
    }
    if (!done) {
      pr.counters = scanner.full_scan(req.scan, sink);
      pr.access = AccessPath::kFull;
    }
  } catch (const Error& e) {
    throw Error(e.code(), "block " + req.scan.block.to_string() + ": " + e.what());
  }

  if (op.kind == FragmentKind::kTopK) {
    std::sort_heap(heap.begin(), heap.end(),
                   [&](const PositionedRow& a, const PositionedRow& b) { return ranks_before(*op.sort, a, b); });
    pr.rows = std::move(heap);
  } else if (op.kind == FragmentKind::kAggregate) {
    pr.groups.reserve(groups.size());
    for (auto& [key, states] : groups) {
      for (auto& s : states) sort_unique(s.distinct);
      pr.groups.push_back({key, std::move(states)});
    }
  }
  return pr;
}

std::vector<PartialResult> dedup_partials(std::vector<PartialResult> partials,
                                          std::size_t expected_fragments) {
  std::vector<std::optional<PartialResult>> slots(expected_fragments);
  for (auto& p : partials) {
    if (p.fragment_id >= expected_fragments) {
      throw_error(ErrorCode::kInternal, fmt::format("unexpected fragment id {}", p.fragment_id));
    }
    if (!slots[p.fragment_id]) slots[p.fragment_id] = std::move(p);
  }
  std::vector<PartialResult> out;
  out.reserve(expected_fragments);
  std::string missing;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) {
      missing += (missing.empty() ? "" : ", ") + std::to_string(i);
      continue;
    }
    out.push_back(std::move(*slots[i]));
  }
  if (!missing.empty()) {
    throw_error(ErrorCode::kIncompleteResult,
                fmt::format("missing fragment(s) {} of {}", missing, expected_fragments));
  }
  return out;
}

std::vector<std::vector<Value>> collect_build_rows(std::vector<PartialResult> partials,
                                                   std::size_t expected_fragments) {
  std::vector<PositionedRow> rows;
  for (auto& p : dedup_partials(std::move(partials), expected_fragments)) {
    for (auto& r : p.rows) rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(),
            [](const PositionedRow& a, const PositionedRow& b) { return a.pos < b.pos; });
  std::vector<std::vector<Value>> out;
  out.reserve(rows.size());
  for (auto& r : rows) out.push_back(std::move(r.values));
  return out;
}

ResultSet merge_partials(const PhysicalPlan& plan, std::vector<PartialResult> partials,
                         std::size_t expected_fragments) {
  auto parts = dedup_partials(std::move(partials), expected_fragments);
  ResultSet result;
  result.columns = plan.columns;
  result.column_types = plan.column_types;
  result.approximate = plan.approximate;

  std::vector<std::vector<Value>> final_rows;
  if (plan.op.kind == FragmentKind::kAggregate) {
    std::map<std::vector<Value>, std::vector<AggState>, RowLess> groups;
    for (auto& p : parts) {
      for (auto& g : p.groups) {
        auto it = groups.find(g.key);
        if (it == groups.end()) {
          groups.emplace(std::move(g.key), std::move(g.states));
          continue;
        }
        for (std::size_t a = 0; a < plan.op.aggregates.size(); ++a) {
          it->second[a].merge(plan.op.aggregates[a], g.states.at(a));
        }
      }
    }
    if (plan.op.group_columns.empty() && groups.empty()) {
      groups.emplace(std::vector<Value>{}, std::vector<AggState>(plan.op.aggregates.size()));
    }
    for (auto& [key, states] : groups) {
      std::vector<Value> row = key;
      for (std::size_t a = 0; a < plan.op.aggregates.size(); ++a) {
        row.push_back(states[a].finalize(plan.op.aggregates[a]));
      }
      final_rows.push_back(std::move(row));
    }
    if (plan.final_sort) {
      const SortSpec s = *plan.final_sort;
      std::stable_sort(final_rows.begin(), final_rows.end(),
                       [&](const std::vector<Value>& a, const std::vector<Value>& b) {
                         const int c = total_compare(a[s.column], b[s.column]);
                         return s.descending ? c > 0 : c < 0;
                       });
    }
  } else {
    std::vector<PositionedRow> rows;
    for (auto& p : parts) {
      for (auto& r : p.rows) rows.push_back(std::move(r));
    }
    if (plan.final_sort) {
      const SortSpec s = *plan.final_sort;
      std::sort(rows.begin(), rows.end(),
                [&](const PositionedRow& a, const PositionedRow& b) { return ranks_before(s, a, b); });
    } else {
      std::sort(rows.begin(), rows.end(),
                [](const PositionedRow& a, const PositionedRow& b) { return a.pos < b.pos; });
    }
    final_rows.reserve(rows.size());
    for (auto& r : rows) final_rows.push_back(std::move(r.values));
  }
  if (plan.limit && final_rows.size() > *plan.limit) final_rows.resize(*plan.limit);

  result.rows.reserve(final_rows.size());
  for (auto& row : final_rows) {
    std::vector<Value> out;
    out.reserve(plan.output_map.size());
    for (auto idx : plan.output_map) out.push_back(row.at(idx));
    result.rows.push_back(std::move(out));
  }
  return result;
}

}  // namespace rawdb
