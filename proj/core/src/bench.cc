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

#include "rawdb/bench.h"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "rawdb/error.h"

namespace rawdb::bench {

namespace {

constexpr std::array<std::pair<Workload, std::string_view>, 8> kWorkloads = {{
    {Workload::kRandomPm, "random_pm"},
    {Workload::kKeyVi, "key_vi"},
    {Workload::kBreakEven, "break_even"},
    {Workload::kAttrScaling, "attr_scaling"},
    {Workload::kSizeScaling, "size_scaling"},
    {Workload::kPmRateSweep, "pm_rate_sweep"},
    {Workload::kTopK, "topk"},
    {Workload::kJoin, "join"},
}};

struct Config {
  std::string name;
  QueryOptions options;
};

struct Query {
  std::string sql;
  std::string table;
  std::vector<Config> configs;
};

// A dataset plus the queries run against it.
struct Stage {
  std::string table;
  std::uint64_t rows = 0;
  std::uint32_t attrs = 0;
  std::uint64_t seed = 0;
  DecoratorConfig config;
  std::vector<Query> queries;
  // Extra tables created with the stage and dropped after it.
  std::vector<Stage> companions;
};

QueryOptions pm_options() {
  QueryOptions o;
  o.use_index = UseIndex::kOff;
  o.use_pm = true;
  o.learn_positions = false;
  return o;
}

DecoratorConfig table_config(const BenchSpec& spec, const std::string& rate) {
  DecoratorConfig c;
  c.pm = parse_pm_rate(rate);
  c.target_block_size = spec.block_size;
  return c;
}

std::string access_of(const QueryResponse& r) {
  bool full = false;
  bool index = false;
  for (const auto& f : r.report.fragments) {
    (f.access == AccessPath::kIndex ? index : full) = true;
  }
  if (index && full) return "mixed";
  return index ? "index" : "full";
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

std::string select_lt(std::uint32_t ax, std::uint32_t ay, std::uint64_t c, const std::string& table) {
  return fmt::format("SELECT a{} FROM {} WHERE a{} < {}", ax, table, ay, c);
}

std::vector<Stage> plan_stages(const BenchSpec& spec) {
  std::mt19937_64 rng(spec.seed ^ 0x5bd1e995ULL);
  const auto pick = [&](std::uint32_t attrs) {
    return static_cast<std::uint32_t>(std::uniform_int_distribution<std::uint32_t>(0, attrs - 1)(rng));
  };
  const std::string default_rate = spec.pm_rates.empty() ? "1/10" : spec.pm_rates.front();
  const std::string pm_name = "pm=" + default_rate;
  const std::uint64_t c = selectivity_constant(spec.selectivity, spec.max_value);
  std::vector<Stage> stages;

  auto base_stage = [&](const std::string& table, std::uint64_t rows, std::uint32_t attrs) {
    Stage s;
    s.table = table;
    s.rows = rows;
    s.attrs = attrs;
    s.seed = spec.seed;
    s.config = table_config(spec, default_rate);
    return s;
  };
  auto random_pm_queries = [&](Stage& s, const std::string& suffix) {
    for (std::uint32_t i = 0; i < spec.queries; ++i) {
      const auto ax = pick(s.attrs);
      const auto ay = pick(s.attrs);
      s.queries.push_back({select_lt(ax, ay, c, s.table), s.table,
                           {{"no_pm" + suffix, no_metadata_options()}, {pm_name + suffix, pm_options()}}});
    }
  };

  switch (spec.workload) {
    case Workload::kRandomPm: {
      Stage s = base_stage("bench_random_pm", spec.rows, spec.attrs);
      random_pm_queries(s, "");
      stages.push_back(std::move(s));
      break;
    }
    case Workload::kKeyVi:
    case Workload::kBreakEven: {
      Stage s = base_stage("bench_key_vi", spec.rows, spec.attrs);
      s.config.vi_attrs = {spec.key_attr};
      s.config.stats = StatsConfig{{spec.key_attr}};
      QueryOptions full = pm_options();
      QueryOptions index = pm_options();
      index.use_index = UseIndex::kOn;
      std::vector<double> sels = {spec.selectivity};
      if (spec.workload == Workload::kBreakEven) {
        sels = spec.selectivities.empty() ? std::vector<double>{1e-4, 1e-3, 5e-3, 1e-2, 5e-2, 0.1, 0.25, 0.5}
                                          : spec.selectivities;
      }
      const std::uint32_t per = std::max<std::uint32_t>(1, spec.queries / static_cast<std::uint32_t>(sels.size()));
      for (double sel : sels) {
        const std::string suffix = spec.workload == Workload::kBreakEven ? fmt::format("@sel={}", sel) : "";
        for (std::uint32_t i = 0; i < per; ++i) {
          s.queries.push_back({select_lt(pick(s.attrs), spec.key_attr, selectivity_constant(sel, spec.max_value), s.table),
                               s.table,
                               {{"full" + suffix, full}, {"index" + suffix, index}}});
        }
      }
      stages.push_back(std::move(s));
      break;
    }
    case Workload::kAttrScaling: {
      const std::vector<std::uint64_t> arities =
          spec.scales.empty() ? std::vector<std::uint64_t>{25, 50, 100, 150, 200} : spec.scales;
      for (auto a : arities) {
        Stage s = base_stage(fmt::format("bench_attrs_{}", a), spec.rows, static_cast<std::uint32_t>(a));
        random_pm_queries(s, fmt::format("@attrs={}", a));
        stages.push_back(std::move(s));
      }
      break;
    }
    case Workload::kSizeScaling: {
      std::vector<std::uint64_t> sizes = spec.scales;
      if (sizes.empty()) {
        for (double f : {0.25, 0.5, 0.75, 1.0}) sizes.push_back(static_cast<std::uint64_t>(f * spec.rows));
      }
      for (auto rows : sizes) {
        Stage s = base_stage(fmt::format("bench_rows_{}", rows), rows, spec.attrs);
        for (std::uint32_t i = 0; i < spec.queries; ++i) {
          s.queries.push_back({select_lt(pick(s.attrs), pick(s.attrs), c, s.table), s.table,
                               {{fmt::format("{}@rows={}", pm_name, rows), pm_options()}}});
        }
        stages.push_back(std::move(s));
      }
      break;
    }
    case Workload::kPmRateSweep: {
      const std::vector<std::string> rates =
          spec.pm_rates.empty() ? std::vector<std::string>{"none", "0", "1/75", "1/50", "1/25", "1/10"}
                                : spec.pm_rates;
      std::vector<std::pair<std::uint32_t, std::uint32_t>> picks;
      for (std::uint32_t i = 0; i < spec.queries; ++i) picks.emplace_back(pick(spec.attrs), pick(spec.attrs));
      for (std::size_t r = 0; r < rates.size(); ++r) {
        Stage s = base_stage(fmt::format("bench_pm_sweep_{}", r), spec.rows, spec.attrs);
        s.config = table_config(spec, rates[r]);
        const QueryOptions o = s.config.pm ? pm_options() : no_metadata_options();
        for (const auto& [ax, ay] : picks) {
          s.queries.push_back({select_lt(ax, ay, c, s.table), s.table, {{"pm=" + rates[r], o}}});
        }
        stages.push_back(std::move(s));
      }
      break;
    }
    case Workload::kTopK: {
      Stage s = base_stage("bench_topk", spec.rows, spec.attrs);
      for (std::uint32_t i = 0; i < spec.queries; ++i) {
        const auto ax = pick(s.attrs);
        const auto ay = pick(s.attrs);
        s.queries.push_back({fmt::format("SELECT a{}, a{} FROM {} ORDER BY a{} DESC LIMIT 10", ax, ay, s.table, ax),
                             s.table,
                             {{"no_pm", no_metadata_options()}, {pm_name, pm_options()}}});
      }
      stages.push_back(std::move(s));
      break;
    }
    case Workload::kJoin: {
      Stage big = base_stage("bench_join_big", spec.rows, spec.attrs);
      big.config.stats = StatsConfig{{spec.key_attr}};
      // Same seed: the small table is a prefix of the big one, so every
      // small row finds at least one partner.
      Stage small = base_stage("bench_join_small", std::max<std::uint64_t>(1, spec.rows / 100), spec.attrs);
      small.config.stats = big.config.stats;
      for (std::uint32_t i = 0; i < spec.queries; ++i) {
        const auto ax = pick(spec.attrs);
        big.queries.push_back(
            {fmt::format("SELECT count(*), max(bench_join_big.a{}) FROM bench_join_big JOIN bench_join_small "
                         "ON bench_join_big.a{} = bench_join_small.a{}",
                         ax, spec.key_attr, spec.key_attr),
             big.table,
             {{"join", pm_options()}}});
      }
      big.companions.push_back(std::move(small));
      stages.push_back(std::move(big));
      break;
    }
  }
  return stages;
}

}  // namespace

std::string_view workload_name(Workload workload) {
  for (const auto& [w, name] : kWorkloads) {
    if (w == workload) return name;
  }
  return "unknown";
}

Workload parse_workload(std::string_view name) {
  for (const auto& [w, n] : kWorkloads) {
    if (n == name) return w;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown workload '{}'", name));
}

const ConfigSummary& BenchReport::summary(std::string_view config) const {
  for (const auto& s : summaries) {
    if (s.config == config) return s;
  }
  throw Error(ErrorCode::kNotFound, fmt::format("no configuration '{}' in the report", config));
}

QueryOptions no_metadata_options() {
  QueryOptions o;
  o.use_index = UseIndex::kOff;
  o.use_pm = false;
  o.learn_positions = false;
  return o;
}

std::uint64_t selectivity_constant(double selectivity, std::uint64_t max_value) {
  return static_cast<std::uint64_t>(std::llround(selectivity * static_cast<double>(max_value)));
}

TableDescriptor LocalBenchTarget::create_table(const std::string& name, std::uint64_t rows, std::uint32_t attrs,
                                               std::uint64_t max_value, std::uint64_t seed,
                                               const DecoratorConfig& config) {
  return ingest_generated(cluster_.write_target(), name, rows, attrs, max_value, seed, config);
}

void LocalBenchTarget::drop_table(const std::string& name) {
  const auto table = cluster_.catalog().table(name);
  if (!table) return;
  cluster_.catalog().drop_table(name);
  for (const auto* list : {&table->data_blocks, &table->pm_blocks, &table->vi_blocks, &table->stats_blocks}) {
    for (const auto& b : *list) cluster_.store().remove(b);
  }
  for (NodeId n = 0; n < cluster_.node_count(); ++n) {
    cluster_.worker(n).metadata_cache().clear();
    cluster_.worker(n).learned_positions().clear();
  }
}

QueryResponse LocalBenchTarget::query(const std::string& sql, const QueryOptions& options) {
  return cluster_.query(sql, options);
}

RemoteBenchTarget::RemoteBenchTarget(std::string coordinator_url, std::filesystem::path root,
                                     std::uint32_t replication)
    : client_(std::move(coordinator_url)), root_(std::move(root)), replication_(replication) {}

TableDescriptor RemoteBenchTarget::create_table(const std::string& name, std::uint64_t rows, std::uint32_t attrs,
                                                std::uint64_t max_value, std::uint64_t seed,
                                                const DecoratorConfig& config) {
  const auto nodes = client_.nodes();
  std::vector<NodeId> live;
  NodeId max_id = 0;
  for (const auto& n : nodes) {
    max_id = std::max(max_id, n.id);
    if (n.state == NodeState::kLive) live.push_back(n.id);
  }
  if (live.empty()) throw Error(ErrorCode::kUnavailable, "no live workers");
  if (!store_ || store_->node_count() <= max_id) store_ = std::make_unique<BlockStore>(root_, max_id + 1);
  HttpTableRegistry registry(client_.url());
  WriteTarget target{store_.get(), std::min<std::uint32_t>(replication_, static_cast<std::uint32_t>(live.size())),
                     live, &registry};
  auto table = ingest_generated(target, name, rows, attrs, max_value, seed, config);
  created_.push_back(table);
  return table;
}

void RemoteBenchTarget::drop_table(const std::string& name) {
  client_.drop_table(name);
  for (auto it = created_.begin(); it != created_.end(); ++it) {
    if (it->name != name) continue;
    for (const auto* list : {&it->data_blocks, &it->pm_blocks, &it->vi_blocks, &it->stats_blocks}) {
      for (const auto& b : *list) store_->remove(b);
    }
    created_.erase(it);
    return;
  }
}

QueryResponse RemoteBenchTarget::query(const std::string& sql, const QueryOptions& options) {
  return client_.query(sql, options);
}

BenchReport run_bench(const BenchSpec& spec, BenchTarget& target,
                      const std::function<void(const std::string&)>& progress) {
  if (spec.queries == 0) throw Error(ErrorCode::kInvalidArgument, "queries must be at least 1");
  if (spec.attrs == 0 || spec.rows == 0) throw Error(ErrorCode::kInvalidArgument, "empty dataset");
  if (spec.key_attr >= spec.attrs) throw Error(ErrorCode::kInvalidArgument, "key attribute outside the schema");
  auto note = [&](const std::string& msg) {
    if (progress) progress(msg);
  };

  BenchReport report;
  report.spec = spec;
  std::map<std::string, std::vector<double>> latencies;
  std::map<std::string, ConfigSummary> summaries;
  std::vector<std::string> order;

  for (auto& stage : plan_stages(spec)) {
    std::vector<std::string> created;
    auto create = [&](const Stage& s) {
      note(fmt::format("generating {} ({} rows x {} attrs)", s.table, s.rows, s.attrs));
      target.drop_table(s.table);
      auto t = target.create_table(s.table, s.rows, s.attrs, spec.max_value, s.seed, s.config);
      created.push_back(s.table);
      return t;
    };
    const TableDescriptor table = create(stage);
    for (const auto& companion : stage.companions) create(companion);
    std::uint64_t pm_bytes = 0;
    for (const auto& b : table.pm_blocks) pm_bytes += b.length;

    for (std::uint32_t qi = 0; qi < stage.queries.size(); ++qi) {
      const Query& q = stage.queries[qi];
      std::optional<ResultSet> oracle;
      if (spec.oracle_gate) {
        const bool reused = std::any_of(q.configs.begin(), q.configs.end(),
                                        [](const Config& c) { return c.options == no_metadata_options(); });
        if (!reused) {
          oracle = target.query(q.sql, no_metadata_options()).result;
        }
      }
      for (const auto& config : q.configs) {
        const auto response = target.query(q.sql, config.options);
        if (spec.oracle_gate) {
          if (!oracle) {
            oracle = response.result;
          } else {
            ++report.oracle_checks;
            if (response.result != *oracle) {
              throw Error(ErrorCode::kInternal,
                          fmt::format("oracle gate: {} differs from the no-metadata result for '{}'",
                                      config.name, q.sql));
            }
          }
        }
        QueryRecord rec;
        rec.config = config.name;
        rec.index = qi;
        rec.sql = q.sql;
        rec.attrs = stage.attrs;
        rec.rows = stage.rows;
        rec.latency_ms = response.report.latency_ms;
        rec.retries = response.report.retries;
        rec.result_rows = response.result.rows.size();
        rec.counters = response.report.counters;
        rec.access = access_of(response);
        auto [it, inserted] = summaries.try_emplace(config.name);
        if (inserted) {
          order.push_back(config.name);
          it->second.config = config.name;
          it->second.attrs = stage.attrs;
          it->second.rows = stage.rows;
          it->second.dataset_bytes = table.byte_count();
          it->second.pm_bytes = config.options.use_pm ? pm_bytes : 0;
        }
        ++it->second.queries;
        it->second.total_ms += rec.latency_ms;
        it->second.counters += rec.counters;
        latencies[config.name].push_back(rec.latency_ms);
        report.records.push_back(std::move(rec));
      }
    }
    if (!spec.keep_tables) {
      for (const auto& name : created) target.drop_table(name);
    }
  }
  for (const auto& name : order) {
    auto s = summaries.at(name);
    s.mean_ms = s.queries ? s.total_ms / s.queries : 0;
    s.median_ms = median(latencies.at(name));
    report.summaries.push_back(std::move(s));
  }
  return report;
}

void write_csv(const BenchReport& report, std::ostream& out) {
  out << "workload,config,query,attrs,rows,latency_ms,retries,result_rows,rows_examined,rows_emitted,"
         "bytes_located,conversions,pm_hits,pm_misses,parse_errors,access\n";
  const auto workload = workload_name(report.spec.workload);
  for (const auto& r : report.records) {
    out << fmt::format("{},{},{},{},{},{:.3f},{},{},{},{},{},{},{},{},{},{}\n", workload, r.config, r.index, r.attrs,
                       r.rows, r.latency_ms, r.retries, r.result_rows, r.counters.rows_examined,
                       r.counters.rows_emitted, r.counters.bytes_located, r.counters.conversions,
                       r.counters.pm_hits, r.counters.pm_misses, r.counters.parse_errors, r.access);
  }
}

void write_summary(const BenchReport& report, std::ostream& out) {
  out << fmt::format("{:<28} {:>7} {:>12} {:>10} {:>10} {:>16} {:>12}\n", "config", "queries", "total_ms",
                     "mean_ms", "median_ms", "bytes_located", "pm_bytes");
  for (const auto& s : report.summaries) {
    out << fmt::format("{:<28} {:>7} {:>12.1f} {:>10.2f} {:>10.2f} {:>16} {:>12}\n", s.config, s.queries,
                       s.total_ms, s.mean_ms, s.median_ms, s.counters.bytes_located, s.pm_bytes);
  }
  if (report.spec.oracle_gate) out << fmt::format("oracle checks passed: {}\n", report.oracle_checks);
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a linear fit needs at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0;
  double sxx = 0;
  double syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace rawdb::bench
