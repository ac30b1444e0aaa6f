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

#include "rawdb/scan.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include <spdlog/spdlog.h>

#include "rawdb/error.h"

namespace rawdb {

namespace {

constexpr std::uint64_t kNpos = std::numeric_limits<std::uint64_t>::max();

// Position just past the n-th separator at or after `pos`, or kNpos when a
// newline or `limit` comes first.
inline std::uint64_t skip_forward(const char* p, std::uint64_t pos, std::uint64_t limit,
                                  std::uint32_t n) {
  if (n == 0) return pos;
#if defined(__SSE2__)
  const __m128i comma = _mm_set1_epi8(',');
  const __m128i newline = _mm_set1_epi8('\n');
  while (pos + 16 <= limit) {
    const __m128i v = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p + pos));
    unsigned c = static_cast<unsigned>(_mm_movemask_epi8(_mm_cmpeq_epi8(v, comma)));
    const unsigned nl = static_cast<unsigned>(_mm_movemask_epi8(_mm_cmpeq_epi8(v, newline)));
    if (nl != 0) c &= (nl & (0u - nl)) - 1;
    const auto count = static_cast<std::uint32_t>(std::popcount(c));
    if (count >= n) {
      for (std::uint32_t k = 1; k < n; ++k) c &= c - 1;
      return pos + static_cast<std::uint64_t>(std::countr_zero(c)) + 1;
    }
    if (nl != 0) return kNpos;
    n -= count;
    pos += 16;
  }
#endif
  for (; pos < limit; ++pos) {
    const char ch = p[pos];
    if (ch == ',') {
      if (--n == 0) return pos + 1;
    } else if (ch == '\n') {
      return kNpos;
    }
  }
  return kNpos;
}

// Start of attribute `target` given the start `anchor_off` of attribute
// `anchor` > target. The anchor may be the virtual attribute one past the
// last, starting at row_len + 1.
inline std::uint64_t skip_backward(const char* p, std::uint64_t anchor_off, std::uint32_t anchor,
                                   std::uint32_t target) {
  std::uint64_t i = anchor_off - 1;
  std::uint32_t need = anchor - target;
  while (need > 0) {
    if (i == 0) return (need == 1 && target == 0) ? 0 : kNpos;
    --i;
    if (p[i] == ',') --need;
    else if (p[i] == '\n') return kNpos;
  }
  return i + 1;
}

struct Source {
  enum Kind : std::uint8_t { kRowStart, kRowEnd, kPm, kLearned, kLocal };
  Kind kind;
  std::uint32_t attr;
  std::uint32_t index;
  std::uint32_t distance;
};

struct NormalizedCmp {
  enum Kind : std::uint8_t { kInt, kFloat, kText };
  CompareOp op;
  Kind kind;
  std::int64_t i = 0;
  double d = 0;
  std::string s;
};

template <typename T>
inline bool apply(CompareOp op, const T& a, const T& b) {
  switch (op) {
    case CompareOp::kLt: return a < b;
    case CompareOp::kLe: return a <= b;
    case CompareOp::kGt: return a > b;
    case CompareOp::kGe: return a >= b;
    case CompareOp::kEq: return a == b;
    case CompareOp::kNe: return a != b;
  }
  return false;
}

// Integer key comparisons folded into lo <= key <= hi plus excluded values.
struct IntKeyRange {
  std::int64_t lo = INT64_MIN;
  std::int64_t hi = INT64_MAX;
  std::vector<std::int64_t> excluded;
  bool empty() const { return lo > hi; }
};

std::optional<IntKeyRange> fold_int_range(const std::vector<NormalizedCmp>& cmps) {
  IntKeyRange r;
  for (const auto& c : cmps) {
    if (c.kind != NormalizedCmp::kInt) return std::nullopt;
    switch (c.op) {
      case CompareOp::kLt:
        if (c.i == INT64_MIN) return IntKeyRange{1, 0, {}};
        r.hi = std::min(r.hi, c.i - 1);
        break;
      case CompareOp::kLe: r.hi = std::min(r.hi, c.i); break;
      case CompareOp::kGt:
        if (c.i == INT64_MAX) return IntKeyRange{1, 0, {}};
        r.lo = std::max(r.lo, c.i + 1);
        break;
      case CompareOp::kGe: r.lo = std::max(r.lo, c.i); break;
      case CompareOp::kEq:
        r.lo = std::max(r.lo, c.i);
        r.hi = std::min(r.hi, c.i);
        break;
      case CompareOp::kNe: r.excluded.push_back(c.i); break;
    }
  }
  return r;
}

inline bool apply_float(CompareOp op, double a, double b) {
  if (a != a || b != b) return false;
  return apply(op, a, b);
}

NormalizedCmp normalize(const Comparison& c, AttrType type) {
  NormalizedCmp out;
  out.op = c.op;
  const Value& lit = c.literal;
  if (type == AttrType::kText) {
    if (!std::holds_alternative<std::string>(lit)) {
      throw_error(ErrorCode::kPlan, "cannot compare text attribute " + std::to_string(c.attr) +
                                        " with " + value_to_string(lit));
    }
    out.kind = NormalizedCmp::kText;
    out.s = std::get<std::string>(lit);
    return out;
  }
  if (const auto* i = std::get_if<std::int64_t>(&lit)) {
    if (type == AttrType::kInt64) {
      out.kind = NormalizedCmp::kInt;
      out.i = *i;
    } else {
      out.kind = NormalizedCmp::kFloat;
      out.d = static_cast<double>(*i);
    }
    return out;
  }
  if (const auto* d = std::get_if<double>(&lit)) {
    out.kind = NormalizedCmp::kFloat;
    out.d = *d;
    return out;
  }
  throw_error(ErrorCode::kPlan, "cannot compare numeric attribute " + std::to_string(c.attr) +
                                    " with " + value_to_string(lit));
}

// A parsed field in the form the normalized comparisons need.
struct Field {
  std::int64_t i = 0;
  double d = 0;
  std::string_view s;
};

inline bool field_terminates(const char* ptr, const char* end) {
  return ptr == end || *ptr == ',' || *ptr == '\n';
}

inline bool parse_field(const char* p, const char* end, AttrType type, Field& out) {
  switch (type) {
    case AttrType::kInt64: {
      auto [ptr, ec] = std::from_chars(p, end, out.i);
      if (ec != std::errc() || !field_terminates(ptr, end)) return false;
      out.d = static_cast<double>(out.i);
      return true;
    }
    case AttrType::kFloat64: {
      auto [ptr, ec] = std::from_chars(p, end, out.d);
      return ec == std::errc() && field_terminates(ptr, end);
    }
    case AttrType::kText: {
      const char* q = p;
      while (q < end && *q != ',' && *q != '\n') ++q;
      if (q == p) return false;
      out.s = std::string_view(p, static_cast<std::size_t>(q - p));
      return true;
    }
  }
  return false;
}

inline bool matches(const NormalizedCmp& c, const Field& f) {
  switch (c.kind) {
    case NormalizedCmp::kInt: return apply(c.op, f.i, c.i);
    case NormalizedCmp::kFloat: return apply_float(c.op, f.d, c.d);
    case NormalizedCmp::kText: return apply(c.op, f.s, std::string_view(c.s));
  }
  return false;
}

inline Value to_value(const Field& f, AttrType type) {
  switch (type) {
    case AttrType::kInt64: return f.i;
    case AttrType::kFloat64: return f.d;
    case AttrType::kText: return std::string(f.s);
  }
  return {};
}

}  // namespace

std::string_view compare_op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "!=";
  }
  return "?";
}

CompareOp parse_compare_op(std::string_view s) {
  if (s == "<") return CompareOp::kLt;
  if (s == "<=") return CompareOp::kLe;
  if (s == ">") return CompareOp::kGt;
  if (s == ">=") return CompareOp::kGe;
  if (s == "=") return CompareOp::kEq;
  if (s == "!=" || s == "<>") return CompareOp::kNe;
  throw_error(ErrorCode::kInvalidArgument, "unknown comparison operator '" + std::string(s) + "'");
}

CompareOp flip(CompareOp op) {
  switch (op) {
    case CompareOp::kLt: return CompareOp::kGt;
    case CompareOp::kLe: return CompareOp::kGe;
    case CompareOp::kGt: return CompareOp::kLt;
    case CompareOp::kGe: return CompareOp::kLe;
    default: return op;
  }
}

bool evaluate(CompareOp op, const Value& value, const Value& literal) {
  const auto ord = compare_values(value, literal);
  if (ord == std::partial_ordering::unordered) return false;
  switch (op) {
    case CompareOp::kLt: return ord < 0;
    case CompareOp::kLe: return ord <= 0;
    case CompareOp::kGt: return ord > 0;
    case CompareOp::kGe: return ord >= 0;
    case CompareOp::kEq: return ord == 0;
    case CompareOp::kNe: return ord != 0;
  }
  return false;
}

std::string_view access_path_name(AccessPath path) {
  return path == AccessPath::kIndex ? "index" : "full";
}

ScanCounters& ScanCounters::operator+=(const ScanCounters& o) {
  rows_examined += o.rows_examined;
  rows_emitted += o.rows_emitted;
  bytes_located += o.bytes_located;
  conversions += o.conversions;
  pm_hits += o.pm_hits;
  pm_misses += o.pm_misses;
  parse_errors += o.parse_errors;
  return *this;
}

std::uint32_t locate_attr(std::string_view row, std::uint32_t arity, std::uint32_t target,
                          std::span<const Anchor> anchors, std::uint64_t* bytes_examined) {
  if (target >= arity) {
    throw_error(ErrorCode::kInvalidArgument, "attribute " + std::to_string(target) +
                                                 " out of range for arity " + std::to_string(arity));
  }
  Anchor best{0, 0};
  std::uint32_t best_dist = target;
  for (const Anchor& a : anchors) {
    if (a.attr >= arity || a.offset > row.size()) continue;
    const std::uint32_t dist = a.attr > target ? a.attr - target : target - a.attr;
    if (dist < best_dist || (dist == best_dist && a.attr < best.attr)) {
      best = a;
      best_dist = dist;
    }
  }
  std::uint64_t pos;
  std::uint64_t examined;
  if (best.attr <= target) {
    pos = skip_forward(row.data(), best.offset, row.size(), target - best.attr);
    examined = (pos == kNpos ? row.size() : pos) - best.offset;
  } else {
    pos = skip_backward(row.data(), best.offset, best.attr, target);
    examined = pos == kNpos ? best.offset : best.offset - 1 - (pos == 0 ? 0 : pos - 1);
  }
  if (bytes_examined) *bytes_examined += examined;
  if (pos == kNpos) {
    throw_error(ErrorCode::kInvalidArgument,
                "row has fewer than " + std::to_string(target + 1) + " attributes");
  }
  return static_cast<std::uint32_t>(pos);
}

// ---------------------------------------------------------------------------
// Learned positions

std::shared_ptr<const std::vector<std::uint64_t>> LearnedPositions::row_starts() const {
  std::lock_guard lock(mu_);
  return row_starts_;
}

std::shared_ptr<const LearnedPositions::Column> LearnedPositions::column(std::uint32_t attr) const {
  std::lock_guard lock(mu_);
  auto it = columns_.find(attr);
  return it == columns_.end() ? nullptr : it->second;
}

std::map<std::uint32_t, std::shared_ptr<const LearnedPositions::Column>> LearnedPositions::columns()
    const {
  std::lock_guard lock(mu_);
  return columns_;
}

void LearnedPositions::publish_row_starts(std::vector<std::uint64_t> starts) {
  auto value = std::make_shared<const std::vector<std::uint64_t>>(std::move(starts));
  std::lock_guard lock(mu_);
  if (!row_starts_) row_starts_ = std::move(value);
}

void LearnedPositions::publish_column(std::uint32_t attr, std::vector<std::uint32_t> offsets) {
  auto existing = column(attr);
  if (existing && existing->complete) return;
  auto merged = std::make_shared<Column>();
  merged->offsets = std::move(offsets);
  if (existing && existing->offsets.size() == merged->offsets.size()) {
    for (std::size_t i = 0; i < merged->offsets.size(); ++i) {
      if (merged->offsets[i] == kUnknown) merged->offsets[i] = existing->offsets[i];
    }
  }
  merged->complete = std::find(merged->offsets.begin(), merged->offsets.end(), kUnknown) ==
                     merged->offsets.end();
  std::lock_guard lock(mu_);
  columns_[attr] = std::move(merged);
}

std::uint64_t LearnedPositions::bytes() const {
  std::lock_guard lock(mu_);
  std::uint64_t total = row_starts_ ? row_starts_->size() * sizeof(std::uint64_t) : 0;
  for (const auto& [attr, col] : columns_) total += col->offsets.size() * sizeof(std::uint32_t);
  return total;
}

std::shared_ptr<LearnedPositions> IncrementalPmCache::for_block(const BlockId& block,
                                                                std::uint64_t version) {
  std::lock_guard lock(mu_);
  auto& slot = blocks_[{block, version}];
  if (!slot) slot = std::make_shared<LearnedPositions>();
  return slot;
}

bool IncrementalPmCache::has_room() const { return bytes() < budget_; }

void IncrementalPmCache::clear() {
  std::lock_guard lock(mu_);
  blocks_.clear();
}

std::uint64_t IncrementalPmCache::bytes() const {
  std::lock_guard lock(mu_);
  std::uint64_t total = 0;
  for (const auto& [id, positions] : blocks_) total += positions->bytes();
  return total;
}

// ---------------------------------------------------------------------------
// Block scanner

struct BlockScanner::Plan {
  struct Target {
    std::uint32_t attr = 0;
    AttrType type = AttrType::kInt64;
    std::vector<Source> sources;
    std::vector<NormalizedCmp> cmps;
    // Index into `learn` when this target's offsets are being recorded.
    int learn_slot = -1;
  };

  std::vector<Target> targets;
  // Targets [0, predicate_targets) carry comparisons.
  std::size_t predicate_targets = 0;
  std::vector<std::size_t> projection;
  std::vector<NormalizedCmp> key_cmps;
  std::vector<std::shared_ptr<const LearnedPositions::Column>> learned_cols;
  std::shared_ptr<const std::vector<std::uint64_t>> learned_rows;
  std::vector<std::vector<std::uint32_t>> learn;
  std::vector<std::uint32_t> learn_attrs;
};

BlockScanner::BlockScanner(const Schema& schema, std::string_view block, std::uint64_t record_count,
                           const PositionalMap* pm, LearnedPositions* learned, ScanOptions options)
    : schema_(schema),
      block_(block),
      record_count_(record_count),
      pm_(pm),
      learned_(learned),
      options_(options) {
  if (pm_ && (pm_->record_count() != record_count_ || pm_->attr_count() != schema_.size())) {
    spdlog::warn("positional map does not match block ({} vs {} records); ignoring it",
                 pm_->record_count(), record_count_);
    pm_ = nullptr;
  }
  if (!options_.learn) learned_ = nullptr;
}

BlockScanner::Plan BlockScanner::make_plan(const ScanRequest& request,
                                           std::optional<std::uint32_t> index_attr) const {
  const auto arity = static_cast<std::uint32_t>(schema_.size());
  Plan plan;
  auto check_attr = [&](std::uint32_t a) {
    if (a >= arity) {
      throw_error(ErrorCode::kPlan, "attribute " + std::to_string(a) + " out of range for arity " +
                                        std::to_string(arity));
    }
  };

  std::map<std::uint32_t, std::vector<NormalizedCmp>> by_attr;
  for (const Comparison& c : request.predicate) {
    check_attr(c.attr);
    NormalizedCmp n = normalize(c, schema_[c.attr].type);
    if (index_attr && c.attr == *index_attr) {
      plan.key_cmps.push_back(std::move(n));
    } else {
      by_attr[c.attr].push_back(std::move(n));
    }
  }
  for (auto& [attr, cmps] : by_attr) {
    Plan::Target t;
    t.attr = attr;
    t.type = schema_[attr].type;
    t.cmps = std::move(cmps);
    plan.targets.push_back(std::move(t));
  }
  plan.predicate_targets = plan.targets.size();

  std::vector<std::uint32_t> extra;
  for (std::uint32_t a : request.projection) {
    check_attr(a);
    if (!by_attr.count(a)) extra.push_back(a);
  }
  std::sort(extra.begin(), extra.end());
  extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
  for (std::uint32_t a : extra) {
    Plan::Target t;
    t.attr = a;
    t.type = schema_[a].type;
    plan.targets.push_back(std::move(t));
  }
  for (std::uint32_t a : request.projection) {
    for (std::size_t i = 0; i < plan.targets.size(); ++i) {
      if (plan.targets[i].attr == a) {
        plan.projection.push_back(i);
        break;
      }
    }
  }

  std::map<std::uint32_t, std::shared_ptr<const LearnedPositions::Column>> learned_cols;
  if (learned_) {
    plan.learned_rows = learned_->row_starts();
    if (plan.learned_rows && plan.learned_rows->size() != record_count_ + 1) plan.learned_rows.reset();
    learned_cols = learned_->columns();
    for (auto it = learned_cols.begin(); it != learned_cols.end();) {
      if (it->second->offsets.size() != record_count_) it = learned_cols.erase(it);
      else ++it;
    }
  }
  const bool rows_known = pm_ || plan.learned_rows;
  const std::vector<std::uint32_t> empty;
  const auto& sampled = pm_ ? pm_->sampled_attrs() : empty;

  auto dist = [](std::uint32_t a, std::uint32_t b) { return a > b ? a - b : b - a; };
  for (std::size_t ti = 0; ti < plan.targets.size(); ++ti) {
    auto& t = plan.targets[ti];
    std::vector<Source> src;
    src.push_back({Source::kRowStart, 0, 0, t.attr});
    if (rows_known) src.push_back({Source::kRowEnd, arity, 0, arity - t.attr});
    if (pm_) {
      auto it = std::upper_bound(sampled.begin(), sampled.end(), t.attr);
      if (it != sampled.end()) {
        src.push_back({Source::kPm, *it, static_cast<std::uint32_t>(it - sampled.begin()),
                       *it - t.attr});
      }
      if (it != sampled.begin()) {
        --it;
        src.push_back({Source::kPm, *it, static_cast<std::uint32_t>(it - sampled.begin()),
                       t.attr - *it});
      }
    }
    for (const auto& [attr, col] : learned_cols) {
      if (!rows_known) break;
      if (pm_ && pm_->slot_of(attr)) continue;
      auto idx = static_cast<std::uint32_t>(plan.learned_cols.size());
      auto found = std::find(plan.learned_cols.begin(), plan.learned_cols.end(), col);
      if (found != plan.learned_cols.end()) {
        idx = static_cast<std::uint32_t>(found - plan.learned_cols.begin());
      } else {
        plan.learned_cols.push_back(col);
      }
      src.push_back({Source::kLearned, attr, idx, dist(attr, t.attr)});
    }
    for (std::size_t j = 0; j < ti; ++j) {
      const std::uint32_t a = plan.targets[j].attr;
      src.push_back({Source::kLocal, a, static_cast<std::uint32_t>(j), dist(a, t.attr)});
    }
    std::stable_sort(src.begin(), src.end(), [](const Source& x, const Source& y) {
      if (x.distance != y.distance) return x.distance < y.distance;
      return x.attr < y.attr;
    });
    // Everything after the first always-available source is unreachable.
    for (std::size_t k = 0; k < src.size(); ++k) {
      const auto kind = src[k].kind;
      if (kind == Source::kRowStart || kind == Source::kRowEnd || kind == Source::kPm ||
          kind == Source::kLocal || (kind == Source::kLearned && plan.learned_cols[src[k].index]->complete)) {
        src.resize(k + 1);
        break;
      }
    }
    t.sources = std::move(src);
    if (learned_ && t.sources.front().distance != 0 && rows_known) {
      t.learn_slot = static_cast<int>(plan.learn.size());
      plan.learn.emplace_back(record_count_, LearnedPositions::kUnknown);
      plan.learn_attrs.push_back(t.attr);
    }
  }
  return plan;
}

namespace {

// Per-row execution state shared by both access paths.
struct RowState {
  const char* row = nullptr;
  std::uint64_t limit = 0;  // row length when known, else bytes to block end
  bool len_known = false;
  std::size_t record = 0;
  const std::uint32_t* pm = nullptr;
  std::vector<std::uint32_t> local;
  std::uint64_t furthest = 0;
};

}  // namespace

namespace {

template <typename PlanT>
std::uint64_t locate(PlanT& plan, std::size_t ti, RowState& rs, std::uint32_t arity,
                     ScanCounters& c) {
  const auto& t = plan.targets[ti];
  for (const Source& s : t.sources) {
    std::uint64_t off;
    switch (s.kind) {
      case Source::kRowStart:
        off = 0;
        break;
      case Source::kRowEnd:
        if (!rs.len_known) continue;
        off = rs.limit + 1;
        break;
      case Source::kPm:
        off = rs.pm[s.index];
        break;
      case Source::kLearned: {
        const std::uint32_t v = plan.learned_cols[s.index]->offsets[rs.record];
        if (v == LearnedPositions::kUnknown) continue;
        off = v;
        break;
      }
      case Source::kLocal:
        off = rs.local[s.index];
        break;
      default:
        continue;
    }
    if (s.distance == 0) {
      ++c.pm_hits;
      return off;
    }
    ++c.pm_misses;
    std::uint64_t pos;
    if (s.attr < t.attr) {
      pos = skip_forward(rs.row, off, rs.limit, t.attr - s.attr);
      c.bytes_located += (pos == kNpos ? rs.limit : pos) - off;
    } else {
      (void)arity;
      pos = skip_backward(rs.row, off, s.attr, t.attr);
      c.bytes_located += pos == kNpos ? off : off - 1 - (pos == 0 ? 0 : pos - 1);
    }
    if (pos != kNpos && t.learn_slot >= 0) {
      plan.learn[static_cast<std::size_t>(t.learn_slot)][rs.record] = static_cast<std::uint32_t>(pos);
    }
    return pos;
  }
  return kNpos;
}

// Locates and tests every predicate target, then converts the projection.
// Returns false when the row does not qualify or fails to parse.
template <typename PlanT>
bool process_row(PlanT& plan, RowState& rs, std::uint32_t arity, ScanCounters& c, ScanRow* out) {
  const char* end = rs.row + rs.limit;
  Field f;
  for (std::size_t ti = 0; ti < plan.predicate_targets; ++ti) {
    const std::uint64_t off = locate(plan, ti, rs, arity, c);
    if (off == kNpos) {
      ++c.parse_errors;
      return false;
    }
    rs.local[ti] = static_cast<std::uint32_t>(off);
    rs.furthest = std::max(rs.furthest, off);
    const auto& t = plan.targets[ti];
    if (!parse_field(rs.row + off, end, t.type, f)) {
      ++c.parse_errors;
      return false;
    }
    for (const auto& cmp : t.cmps) {
      if (!matches(cmp, f)) return false;
    }
  }
  for (std::size_t ti = plan.predicate_targets; ti < plan.targets.size(); ++ti) {
    const std::uint64_t off = locate(plan, ti, rs, arity, c);
    if (off == kNpos) {
      ++c.parse_errors;
      return false;
    }
    rs.local[ti] = static_cast<std::uint32_t>(off);
    rs.furthest = std::max(rs.furthest, off);
  }
  out->values.clear();
  out->values.reserve(plan.projection.size());
  for (std::size_t ti : plan.projection) {
    const auto& t = plan.targets[ti];
    if (!parse_field(rs.row + rs.local[ti], end, t.type, f)) {
      ++c.parse_errors;
      return false;
    }
    ++c.conversions;
    out->values.push_back(to_value(f, t.type));
  }
  return true;
}

}  // namespace

ScanCounters BlockScanner::full_scan(const ScanRequest& request, const RowSink& sink) {
  Plan plan = make_plan(request, std::nullopt);
  const auto arity = static_cast<std::uint32_t>(schema_.size());
  ScanCounters c;
  RowState rs;
  rs.local.assign(plan.targets.size(), 0);
  const char* base = block_.data();
  const std::uint64_t block_len = block_.size();
  const bool use_pm_rows = pm_ != nullptr;
  const auto* learned_rows = plan.learned_rows.get();
  const bool rows_known = use_pm_rows || learned_rows;
  std::vector<std::uint64_t> found_rows;
  const bool record_rows = !rows_known && learned_ != nullptr;
  if (record_rows) found_rows.reserve(record_count_ + 1);

  // Prefetch rows ahead along the PM's row lengths: the line holding the
  // anchor the first target navigates from, and the next line in the
  // direction of travel.
  constexpr std::size_t kAhead = 16;
  std::uint64_t ahead_start = 0;
  std::size_t ahead = 0;
  std::size_t prefetch_slot = SIZE_MAX;
  bool prefetch_row_end = false;
  bool prefetch_backward = false;
  if (use_pm_rows && !plan.targets.empty()) {
    const auto& t = plan.targets.front();
    const Source& s = t.sources.back();
    if (s.kind == Source::kPm) prefetch_slot = s.index;
    prefetch_row_end = s.kind == Source::kRowEnd;
    prefetch_backward = s.attr > t.attr;
  }

  bool stopped = false;
  std::uint64_t start = 0;
  ScanRow out;
  for (std::size_t i = 0; i < record_count_; ++i) {
    if (learned_rows) start = (*learned_rows)[i];
    if (start >= block_len) {
      throw_error(ErrorCode::kMetadataInconsistency,
                  "block " + request.block.to_string() + " ends before record " + std::to_string(i));
    }
    rs.row = base + start;
    rs.record = i;
    rs.furthest = 0;
    if (use_pm_rows) {
      rs.limit = pm_->row_len(i);
      rs.len_known = true;
      rs.pm = pm_->sampled_count() ? pm_->offsets(i).data() : nullptr;
      while (ahead < record_count_ && ahead < i + kAhead) {
        ahead_start += pm_->row_len(ahead) + 1;
        ++ahead;
        if (ahead < record_count_) {
          std::uint64_t at = ahead_start;
          if (prefetch_slot != SIZE_MAX) {
            at += pm_->offsets(ahead)[prefetch_slot];
          } else if (prefetch_row_end) {
            at += pm_->row_len(ahead);
          }
          if (at < block_len) __builtin_prefetch(base + at);
          if (prefetch_backward) {
            if (at >= 64) __builtin_prefetch(base + at - 64);
          } else if (at + 64 < block_len) {
            __builtin_prefetch(base + at + 64);
          }
        }
      }
    } else if (learned_rows) {
      rs.limit = (*learned_rows)[i + 1] - start - 1;
      rs.len_known = true;
    } else {
      rs.limit = block_len - start;
      rs.len_known = false;
      if (record_rows) found_rows.push_back(start);
    }

    ++c.rows_examined;
    const bool ok = process_row(plan, rs, arity, c, &out);
    if (ok) {
      ++c.rows_emitted;
      out.record = i;
      out.row_offset = start;
      if (!sink(std::move(out))) stopped = true;
      out = ScanRow{};
      if (request.limit && c.rows_emitted >= *request.limit) stopped = true;
    }

    if (rs.len_known) {
      start += rs.limit + 1;
    } else {
      const void* nl = std::memchr(rs.row + rs.furthest, '\n', rs.limit - rs.furthest);
      if (!nl) {
        throw_error(ErrorCode::kCorruption,
                    "unterminated record " + std::to_string(i) + " in " + request.block.to_string());
      }
      const auto len = static_cast<std::uint64_t>(static_cast<const char*>(nl) - rs.row);
      c.bytes_located += len + 1 - rs.furthest;
      start += len + 1;
    }
    if (stopped) break;
  }

  if (learned_ && !stopped) {
    if (record_rows) {
      found_rows.push_back(start);
      if (start == block_len) learned_->publish_row_starts(std::move(found_rows));
    }
  }
  if (learned_) {
    for (std::size_t k = 0; k < plan.learn.size(); ++k) {
      learned_->publish_column(plan.learn_attrs[k], std::move(plan.learn[k]));
    }
  }
  return c;
}

ScanCounters BlockScanner::index_scan(const ScanRequest& request, const VerticalIndex& vi,
                                      const RowSink& sink) {
  if (vi.size() != record_count_) {
    throw_error(ErrorCode::kMetadataInconsistency,
                "vertical index on attribute " + std::to_string(vi.key_attr()) + " has " +
                    std::to_string(vi.size()) + " entries for " + std::to_string(record_count_) +
                    " records in " + request.block.to_string());
  }
  if (vi.key_attr() >= schema_.size()) {
    throw_error(ErrorCode::kMetadataInconsistency, "vertical index key attribute out of range");
  }
  Plan plan = make_plan(request, vi.key_attr());
  const auto arity = static_cast<std::uint32_t>(schema_.size());
  ScanCounters c;
  RowState rs;
  rs.local.assign(plan.targets.size(), 0);
  const char* base = block_.data();
  const std::uint64_t block_len = block_.size();
  const auto* learned_rows = plan.learned_rows.get();
  const bool is_int = vi.key_type() == KeyType::kInt64;
  const auto& ikeys = vi.int_keys();
  const auto& fkeys = vi.float_keys();
  const auto& offsets = vi.row_offsets();

  const auto range = is_int ? fold_int_range(plan.key_cmps) : std::nullopt;
  const std::size_t n = range && range->empty() ? 0 : record_count_;
  const auto range_lo = range ? static_cast<std::uint64_t>(range->lo) : 0;
  const auto range_width = range ? static_cast<std::uint64_t>(range->hi) - range_lo : 0;

  ScanRow out;
  for (std::size_t i = 0; i < n; ++i) {
    bool pass = true;
    if (range) {
      while (i < n && static_cast<std::uint64_t>(ikeys[i]) - range_lo > range_width) ++i;
      if (i == n) break;
      pass = std::find(range->excluded.begin(), range->excluded.end(), ikeys[i]) == range->excluded.end();
    } else if (is_int) {
      const std::int64_t k = ikeys[i];
      for (const auto& cmp : plan.key_cmps) {
        if (cmp.kind == NormalizedCmp::kInt ? !apply(cmp.op, k, cmp.i)
                                            : !apply_float(cmp.op, static_cast<double>(k), cmp.d)) {
          pass = false;
          break;
        }
      }
    } else {
      const double k = fkeys[i];
      for (const auto& cmp : plan.key_cmps) {
        if (!apply_float(cmp.op, k, cmp.kind == NormalizedCmp::kInt ? static_cast<double>(cmp.i) : cmp.d)) {
          pass = false;
          break;
        }
      }
    }
    if (!pass) continue;

    const std::uint64_t start = offsets[i];
    if (start >= block_len) {
      throw_error(ErrorCode::kMetadataInconsistency,
                  "index row offset " + std::to_string(start) + " beyond block end");
    }
    rs.row = base + start;
    rs.record = i;
    rs.furthest = 0;
    if (pm_) {
      rs.limit = pm_->row_len(i);
      rs.len_known = true;
      rs.pm = pm_->sampled_count() ? pm_->offsets(i).data() : nullptr;
    } else if (learned_rows) {
      rs.limit = (*learned_rows)[i + 1] - start - 1;
      rs.len_known = true;
    } else {
      rs.limit = block_len - start;
      rs.len_known = false;
    }
    ++c.rows_examined;
    if (process_row(plan, rs, arity, c, &out)) {
      ++c.rows_emitted;
      out.record = i;
      out.row_offset = start;
      const bool more = sink(std::move(out));
      out = ScanRow{};
      if (!more || (request.limit && c.rows_emitted >= *request.limit)) break;
    }
  }
  if (learned_) {
    for (std::size_t k = 0; k < plan.learn.size(); ++k) {
      learned_->publish_column(plan.learn_attrs[k], std::move(plan.learn[k]));
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Metadata cache

std::shared_ptr<MetadataCache::Entry> MetadataCache::entry(const BlockId& id,
                                                          std::uint64_t version) {
  std::lock_guard lock(mu_);
  auto& slot = entries_[{id, version}];
  if (!slot) slot = std::make_shared<Entry>();
  return slot;
}

std::shared_ptr<const PositionalMap> MetadataCache::pm(const BlockId& id, std::uint64_t version,
                                                      const Loader& load) {
  auto e = entry(id, version);
  std::call_once(e->once, [&] {
    auto bytes = load();
    if (!bytes) return;
    try {
      e->value = std::make_shared<const PositionalMap>(decode_pm(*bytes));
      ++decodes_;
    } catch (const Error& err) {
      ++failures_;
      spdlog::warn("ignoring positional map {}: {}", id.to_string(), err.what());
    }
  });
  return std::static_pointer_cast<const PositionalMap>(e->value);
}

std::shared_ptr<const std::vector<VerticalIndex>> MetadataCache::vi(const BlockId& id,
                                                                    std::uint64_t version,
                                                                    const Loader& load) {
  auto e = entry(id, version);
  std::call_once(e->once, [&] {
    auto bytes = load();
    if (!bytes) return;
    try {
      e->value = std::make_shared<const std::vector<VerticalIndex>>(decode_vi_set(*bytes));
      ++decodes_;
    } catch (const Error& err) {
      ++failures_;
      spdlog::warn("ignoring vertical index {}: {}", id.to_string(), err.what());
    }
  });
  return std::static_pointer_cast<const std::vector<VerticalIndex>>(e->value);
}

void MetadataCache::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
}

}  // namespace rawdb
