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

#include "rawdb/decorators.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rawdb/error.h"

namespace rawdb {

// ---------------------------------------------------------------------------
// Configuration

std::vector<std::uint32_t> PmConfig::sampled_attrs(std::uint32_t arity) const {
  std::vector<std::uint32_t> out;
  if (mode == Mode::kRate) {
    if (rate_k == 0) return out;
    for (std::uint32_t a = 0; a < arity; a += rate_k) out.push_back(a);
    return out;
  }
  out = attrs;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint32_t parse_u32(std::string_view s, std::string_view what) {
  auto v = parse_int64(trim(s));
  if (!v || *v < 0 || *v > UINT32_MAX) {
    throw_error(ErrorCode::kInvalidArgument, fmt::format("invalid {} '{}'", what, s));
  }
  return static_cast<std::uint32_t>(*v);
}

}  // namespace

std::optional<PmConfig> parse_pm_rate(std::string_view text) {
  text = trim(text);
  if (text == "none" || text == "off") return std::nullopt;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    if (parse_u32(text.substr(0, slash), "pm rate numerator") != 1) {
      throw_error(ErrorCode::kInvalidArgument, fmt::format("pm rate must be 1/k, got '{}'", text));
    }
    const std::uint32_t k = parse_u32(text.substr(slash + 1), "pm rate denominator");
    if (k == 0) throw_error(ErrorCode::kInvalidArgument, "pm rate 1/0 is undefined");
    return PmConfig::rate(k);
  }
  const auto rate = parse_float64(text);
  if (!rate || *rate < 0 || *rate > 1) {
    throw_error(ErrorCode::kInvalidArgument, fmt::format("invalid pm rate '{}'", text));
  }
  if (*rate == 0) return PmConfig::rate(0);
  return PmConfig::rate(static_cast<std::uint32_t>(std::lround(1.0 / *rate)));
}

std::vector<std::uint32_t> parse_attr_list(std::string_view text, const Schema& schema) {
  std::vector<std::uint32_t> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = trim(text.substr(pos, comma - pos));
    if (auto idx = schema.index_of(item)) {
      out.push_back(*idx);
    } else {
      out.push_back(parse_u32(item, "attribute"));
    }
    pos = comma + 1;
  }
  return out;
}

std::uint64_t parse_byte_size(std::string_view text) {
  text = trim(text);
  std::uint64_t mult = 1;
  if (!text.empty()) {
    switch (std::toupper(static_cast<unsigned char>(text.back()))) {
      case 'K':
        mult = 1ULL << 10;
        break;
      case 'M':
        mult = 1ULL << 20;
        break;
      case 'G':
        mult = 1ULL << 30;
        break;
      default:
        break;
    }
    if (mult != 1) text.remove_suffix(1);
  }
  const auto v = parse_int64(text);
  if (!v || *v <= 0) throw_error(ErrorCode::kInvalidArgument, fmt::format("invalid size '{}'", text));
  return static_cast<std::uint64_t>(*v) * mult;
}

DecoratorConfig DecoratorConfig::parse(std::string_view text, const Schema& schema) {
  DecoratorConfig cfg;
  std::optional<PmConfig> rate;
  std::optional<std::vector<std::uint32_t>> pm_attrs;
  std::vector<std::uint32_t> stats_attrs;
  std::uint8_t precision = HllSketch::kDefaultPrecision;
  bool stats_seen = false;
  bool pm_none = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw_error(ErrorCode::kInvalidArgument, fmt::format("config line {}: expected key = value", line_no));
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "pm.rate") {
      rate = parse_pm_rate(value);
      pm_none = !rate;
    } else if (key == "pm.attrs") {
      pm_attrs = parse_attr_list(value, schema);
    } else if (key == "vi.attrs") {
      cfg.vi_attrs = parse_attr_list(value, schema);
    } else if (key == "stats.attrs") {
      stats_attrs = parse_attr_list(value, schema);
      stats_seen = true;
    } else if (key == "stats.precision") {
      const auto p = parse_u32(value, "stats.precision");
      if (p < HllSketch::kMinPrecision || p > HllSketch::kMaxPrecision) {
        throw_error(ErrorCode::kInvalidArgument, fmt::format("stats.precision {} out of range", p));
      }
      precision = static_cast<std::uint8_t>(p);
    } else if (key == "block.size") {
      cfg.target_block_size = parse_byte_size(value);
    } else {
      throw_error(ErrorCode::kInvalidArgument, fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
  }
  if ((rate || pm_none) && pm_attrs) {
    throw_error(ErrorCode::kInvalidArgument, "pm.rate and pm.attrs are mutually exclusive");
  }
  if (rate) cfg.pm = rate;
  if (pm_attrs) cfg.pm = PmConfig::explicit_attrs(*pm_attrs);
  if (stats_seen) cfg.stats = StatsConfig{stats_attrs, precision};
  cfg.validate(schema);
  return cfg;
}

DecoratorConfig DecoratorConfig::load(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::kIo, fmt::format("cannot read config file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), schema);
}

void DecoratorConfig::validate(const Schema& schema) const {
  const auto arity = schema.size();
  if (target_block_size == 0) throw_error(ErrorCode::kInvalidArgument, "block size must be positive");
  if (pm && pm->mode == PmConfig::Mode::kExplicit) {
    for (const auto a : pm->attrs) {
      if (a >= arity) {
        throw_error(ErrorCode::kInvalidArgument,
                    fmt::format("pm attribute {} does not exist in a {}-attribute schema", a, arity));
      }
    }
  }
  std::vector<std::uint32_t> seen;
  for (const auto a : vi_attrs) {
    if (a >= arity) {
      throw_error(ErrorCode::kInvalidArgument,
                  fmt::format("vi attribute {} does not exist in a {}-attribute schema", a, arity));
    }
    if (!is_numeric(schema[a].type)) {
      throw_error(ErrorCode::kInvalidArgument,
                  fmt::format("vi attribute '{}' must be int64 or float64", schema[a].name));
    }
    if (std::find(seen.begin(), seen.end(), a) != seen.end()) {
      throw_error(ErrorCode::kInvalidArgument, fmt::format("vi attribute {} listed twice", a));
    }
    seen.push_back(a);
  }
  if (stats) {
    if (stats->precision < HllSketch::kMinPrecision || stats->precision > HllSketch::kMaxPrecision) {
      throw_error(ErrorCode::kInvalidArgument, "stats precision out of range");
    }
    for (const auto a : stats->attrs) {
      if (a >= arity) {
        throw_error(ErrorCode::kInvalidArgument,
                    fmt::format("stats attribute {} does not exist in a {}-attribute schema", a, arity));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Decorators

namespace {

class PmDecorator final : public Decorator {
 public:
  PmDecorator(std::uint32_t arity, std::vector<std::uint32_t> sampled)
      : arity_(arity), sampled_(std::move(sampled)), pm_(arity_, sampled_), scratch_(sampled_.size()) {}

  BlockKind kind() const override { return BlockKind::kPm; }

  void process(const EncodedTuple& t) override {
    for (std::size_t k = 0; k < sampled_.size(); ++k) scratch_[k] = t.attr_offsets[sampled_[k]];
    pm_.append(scratch_, static_cast<std::uint32_t>(t.row.size()));
  }

  std::string seal() override {
    std::string out = encode_pm(pm_);
    pm_ = PositionalMap(arity_, sampled_);
    return out;
  }

  const std::vector<std::uint32_t>& sampled() const { return sampled_; }

 private:
  std::uint32_t arity_;
  std::vector<std::uint32_t> sampled_;
  PositionalMap pm_;
  std::vector<std::uint32_t> scratch_;
};

class ViDecorator final : public Decorator {
 public:
  ViDecorator(const Schema& schema, const std::vector<std::uint32_t>& keys, WriterCounters& counters)
      : counters_(counters) {
    for (const auto a : keys) {
      keys_.push_back({a, schema[a].type == AttrType::kInt64 ? KeyType::kInt64 : KeyType::kFloat64});
    }
    reset();
  }

  BlockKind kind() const override { return BlockKind::kVi; }

  void process(const EncodedTuple& t) override {
    for (std::size_t k = 0; k < keys_.size(); ++k) {
      const auto [attr, type] = keys_[k];
      const std::string_view field = t.attrs[attr];
      if (type == KeyType::kInt64) {
        const auto v = parse_int64(field);
        if (!v) throw_bad_key(t, attr, field);
        indexes_[k].append_int(*v, t.row_start);
      } else {
        const auto v = parse_float64(field);
        if (!v) throw_bad_key(t, attr, field);
        if (std::isnan(*v)) ++counters_.nan_keys;
        indexes_[k].append_float(*v, t.row_start);
      }
    }
  }

  std::string seal() override {
    std::string out = encode_vi_set(indexes_);
    reset();
    return out;
  }

 private:
  [[noreturn]] static void throw_bad_key(const EncodedTuple& t, std::uint32_t attr, std::string_view field) {
    throw_error(ErrorCode::kInvalidArgument,
                fmt::format("row {}: vertical index key attribute {} value '{}' is not numeric", t.row_number,
                            attr, field));
  }

  void reset() {
    indexes_.clear();
    for (const auto [attr, type] : keys_) indexes_.emplace_back(attr, type);
  }

  struct Key {
    std::uint32_t attr;
    KeyType type;
  };
  std::vector<Key> keys_;
  std::vector<VerticalIndex> indexes_;
  WriterCounters& counters_;
};

class StatsDecorator final : public Decorator {
 public:
  StatsDecorator(StatsConfig config, std::vector<TableStatistics>& sink)
      : config_(std::move(config)), sink_(sink) {
    std::sort(config_.attrs.begin(), config_.attrs.end());
    config_.attrs.erase(std::unique(config_.attrs.begin(), config_.attrs.end()), config_.attrs.end());
    reset();
  }

  BlockKind kind() const override { return BlockKind::kStats; }

  void process(const EncodedTuple& t) override {
    ++current_.record_count;
    for (auto& a : current_.attrs) a.sketch.insert(t.attrs[a.attr]);
  }

  std::string seal() override {
    std::string out = encode_stats(current_);
    sink_.push_back(std::move(current_));
    reset();
    return out;
  }

  TableStatistics empty() const {
    TableStatistics s;
    for (const auto a : config_.attrs) s.attrs.push_back({a, HllSketch(config_.precision)});
    return s;
  }

 private:
  void reset() { current_ = empty(); }

  StatsConfig config_;
  std::vector<TableStatistics>& sink_;
  TableStatistics current_;
};

bool valid_table_name(std::string_view name) {
  if (name.empty() || name.size() > 128 || name.front() == '_') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

std::uint64_t now_ms() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
}

}  // namespace

// ---------------------------------------------------------------------------
// Writer

DecoratedWriter::DecoratedWriter(WriteTarget target, std::string table, Schema schema,
                                 DecoratorConfig config)
    : target_(std::move(target)), table_(std::move(table)), schema_(std::move(schema)), config_(std::move(config)) {
  if (!target_.store) throw_error(ErrorCode::kInvalidArgument, "write target has no block store");
  if (target_.live_nodes.empty()) throw_error(ErrorCode::kUnavailable, "no live nodes to write to");
  if (!valid_table_name(table_)) {
    throw_error(ErrorCode::kInvalidArgument, fmt::format("invalid table name '{}'", table_));
  }
  if (schema_.empty()) throw_error(ErrorCode::kInvalidArgument, "schema has no attributes");
  if (target_.registry && target_.registry->has_table(table_)) {
    throw_error(ErrorCode::kAlreadyExists, fmt::format("table '{}' already exists", table_));
  }
  config_.validate(schema_);
  auto& keys = config_.vi_attrs;
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  const auto arity = static_cast<std::uint32_t>(schema_.size());
  descriptor_.name = table_;
  descriptor_.schema = schema_;
  descriptor_.target_block_size = config_.target_block_size;
  descriptor_.replication = target_.replication;
  descriptor_.key_attrs = config_.vi_attrs;

  // Fixed order: PM, VI, statistics; the data sink is the block buffer.
  if (config_.pm) {
    auto pm = std::make_unique<PmDecorator>(arity, config_.pm->sampled_attrs(arity));
    descriptor_.pm_sampled = pm->sampled();
    chain_.push_back(std::move(pm));
  }
  if (!config_.vi_attrs.empty()) {
    chain_.push_back(std::make_unique<ViDecorator>(schema_, config_.vi_attrs, counters_));
  }
  if (config_.stats) chain_.push_back(std::make_unique<StatsDecorator>(*config_.stats, block_stats_));
  offsets_scratch_.resize(arity);
  block_.reserve(std::min<std::uint64_t>(config_.target_block_size, 64ULL << 20));
}

DecoratedWriter::~DecoratedWriter() {
  if (!closed_) {
    try {
      abort();
    } catch (...) {
    }
  }
}

void DecoratedWriter::abort() {
  failed_ = true;
  for (const auto* list : {&descriptor_.data_blocks, &descriptor_.pm_blocks, &descriptor_.vi_blocks,
                           &descriptor_.stats_blocks}) {
    for (const auto& m : *list) target_.store->remove(m);
  }
  descriptor_.data_blocks.clear();
  descriptor_.pm_blocks.clear();
  descriptor_.vi_blocks.clear();
  descriptor_.stats_blocks.clear();
}

void DecoratedWriter::reject(const std::string& message) {
  abort();
  throw_error(ErrorCode::kInvalidArgument, message);
}

void DecoratedWriter::write_tuple(std::span<const std::string_view> attrs) {
  if (closed_) throw_error(ErrorCode::kPrecondition, "writer is closed");
  if (failed_) throw_error(ErrorCode::kPrecondition, "writer failed; the write was aborted");
  const std::uint64_t row_number = counters_.tuples + 1;
  if (attrs.size() != schema_.size()) {
    reject(fmt::format("row {}: expected {} attributes, got {}", row_number, schema_.size(), attrs.size()));
  }
  std::uint64_t row_len = attrs.size() - 1;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const auto a = attrs[i];
    if (a.find_first_of(",\n") != std::string_view::npos) {
      reject(fmt::format("row {}: attribute {} contains a separator or terminator", row_number, i));
    }
    row_len += a.size();
  }
  if (!attrs.back().empty() && attrs.back().back() == '\r') {
    reject(fmt::format("row {}: CRLF terminators are not accepted", row_number));
  }
  if (row_len + 1 > config_.target_block_size) {
    reject(fmt::format("row {}: record of {} bytes exceeds the target block size {}", row_number, row_len + 1,
                       config_.target_block_size));
  }
  if (block_records_ > 0 && block_.size() + row_len + 1 > config_.target_block_size) {
    try {
      seal_block();
    } catch (...) {
      abort();
      throw;
    }
  }

  const std::uint64_t row_start = block_.size();
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (i) block_.push_back(kSeparator);
    offsets_scratch_[i] = static_cast<std::uint32_t>(block_.size() - row_start);
    block_.append(attrs[i]);
  }
  EncodedTuple tuple{attrs, std::string_view(block_).substr(row_start, row_len), offsets_scratch_, row_start,
                     row_number};
  try {
    for (auto& d : chain_) d->process(tuple);
  } catch (const Error& e) {
    reject(e.what());
  }
  block_.push_back(kTerminator);
  ++block_records_;
  ++counters_.tuples;
}

void DecoratedWriter::seal_block() {
  if (block_records_ == 0) return;
  const auto ordinal = static_cast<std::uint32_t>(descriptor_.data_blocks.size());
  const ReplicationPolicy policy(target_.replication, target_.store->node_count());

  BlockMeta data;
  data.id = {table_, BlockKind::kData, ordinal};
  data.length = block_.size();
  data.record_count = block_records_;
  data.checksum = block_checksum(block_);
  data = place_replicas(std::move(data), policy, target_.live_nodes[ordinal % target_.live_nodes.size()],
                        target_.live_nodes);

  std::vector<std::pair<BlockMeta, std::string>> metadata;
  for (auto& d : chain_) {
    std::string bytes = d->seal();
    BlockMeta m;
    m.id = {table_, d->kind(), ordinal};
    m.length = bytes.size();
    m.record_count = block_records_;
    m.checksum = block_checksum(bytes);
    metadata.emplace_back(colocate_with(std::move(m), data), std::move(bytes));
  }

  target_.store->store(data, block_);
  descriptor_.data_blocks.push_back(data);
  for (auto& [meta, bytes] : metadata) {
    target_.store->store(meta, bytes);
    switch (meta.id.kind) {
      case BlockKind::kPm:
        descriptor_.pm_blocks.push_back(std::move(meta));
        break;
      case BlockKind::kVi:
        descriptor_.vi_blocks.push_back(std::move(meta));
        break;
      case BlockKind::kStats:
        descriptor_.stats_blocks.push_back(std::move(meta));
        break;
      case BlockKind::kData:
        break;
    }
  }
  counters_.bytes += block_.size();
  ++counters_.blocks;
  block_.clear();
  block_records_ = 0;
}

TableDescriptor DecoratedWriter::close() {
  if (closed_) throw_error(ErrorCode::kPrecondition, "writer already closed");
  if (failed_) throw_error(ErrorCode::kPrecondition, "writer failed; the write was aborted");
  try {
    seal_block();
    if (config_.stats) {
      if (block_stats_.empty()) {
        TableStatistics empty;
        for (auto a : config_.stats->attrs) {
          if (!empty.sketch_for(a)) empty.attrs.push_back({a, HllSketch(config_.stats->precision)});
        }
        std::sort(empty.attrs.begin(), empty.attrs.end(),
                  [](const AttrSketch& x, const AttrSketch& y) { return x.attr < y.attr; });
        descriptor_.stats = std::move(empty);
      } else {
        descriptor_.stats = stats_merge(block_stats_);
      }
    } else {
      descriptor_.stats = TableStatistics{counters_.tuples, {}};
    }
    descriptor_.created_ms = now_ms();
    descriptor_.validate();
    if (target_.registry) target_.registry->register_table(descriptor_);
  } catch (...) {
    abort();
    throw;
  }
  closed_ = true;
  return descriptor_;
}

std::unique_ptr<DecoratedWriter> open_decorated_writer(WriteTarget target, std::string table, Schema schema,
                                                       DecoratorConfig config) {
  return std::make_unique<DecoratedWriter>(std::move(target), std::move(table), std::move(schema),
                                           std::move(config));
}

TableDescriptor decorate_existing(const std::filesystem::path& csv_path, std::string table, const Schema& schema,
                                  const DecoratorConfig& config, WriteTarget target) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw_error(ErrorCode::kIo, fmt::format("cannot open {}", csv_path.string()));
  DecoratedWriter writer(std::move(target), std::move(table), schema, config);

  constexpr std::size_t kChunk = 4 << 20;
  std::string buf;
  std::size_t begin = 0;
  std::vector<std::string_view> fields;
  fields.reserve(schema.size());
  std::uint64_t row = 0;
  bool eof = false;
  while (true) {
    // Compact and refill.
    if (!eof) {
      buf.erase(0, begin);
      begin = 0;
      const std::size_t old = buf.size();
      buf.resize(old + kChunk);
      in.read(buf.data() + old, static_cast<std::streamsize>(kChunk));
      buf.resize(old + static_cast<std::size_t>(in.gcount()));
      eof = in.gcount() == 0 || in.eof();
    }
    while (true) {
      const char* base = buf.data() + begin;
      const void* nl = std::memchr(base, '\n', buf.size() - begin);
      if (!nl) break;
      const std::size_t line_len = static_cast<const char*>(nl) - base;
      std::string_view line(base, line_len);
      ++row;
      fields.clear();
      std::size_t p = 0;
      while (true) {
        const void* comma = std::memchr(line.data() + p, ',', line.size() - p);
        if (!comma) {
          fields.push_back(line.substr(p));
          break;
        }
        const std::size_t c = static_cast<const char*>(comma) - line.data();
        fields.push_back(line.substr(p, c - p));
        p = c + 1;
      }
      if (fields.size() != schema.size()) {
        throw_error(ErrorCode::kInvalidArgument,
                    fmt::format("{}: row {} has {} attributes, schema expects {}", csv_path.string(), row,
                                fields.size(), schema.size()));
      }
      writer.write_tuple(fields);
      begin += line_len + 1;
    }
    if (eof) {
      if (begin != buf.size()) {
        throw_error(ErrorCode::kInvalidArgument,
                    fmt::format("{}: row {} is not terminated by a newline", csv_path.string(), row + 1));
      }
      break;
    }
  }
  return writer.close();
}

}  // namespace rawdb
