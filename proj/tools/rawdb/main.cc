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

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "format.h"
#include "rawdb/bench.h"
#include "rawdb/cluster.h"
#include "rawdb/datagen.h"
#include "rawdb/decorators.h"
#include "rawdb/error.h"
#include "rawdb/sql.h"

namespace rawdb::cli {
namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitQuery = 3;
constexpr int kExitCluster = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return kExitUsage;
    case ErrorCode::kUnavailable:
    case ErrorCode::kNotHere:
    case ErrorCode::kIo:
    case ErrorCode::kStorageFull:
    case ErrorCode::kCorruption:
    case ErrorCode::kInternal: return kExitCluster;
    default: return kExitQuery;
  }
}

struct Globals {
  std::string root;
  std::string coordinator;
  bool local = false;
  std::uint32_t nodes = 1;
  std::uint32_t replication = 1;
  std::uint64_t seed = 42;
  std::string block_size = "8M";
  std::string pm_rate = "1/10";
  std::string vi_attrs;
  std::string stats_attrs;
  std::uint64_t timeout_ms = 0;
  std::string use_index = "auto";
  std::string format = "table";
  bool verbose = false;
};

// Block root from --root or RAWDB_ROOT, else a scratch directory removed at
// exit.
class RootDir {
 public:
  explicit RootDir(const std::string& configured) {
    if (!configured.empty()) {
      path_ = configured;
      return;
    }
    path_ = fs::temp_directory_path() / fmt::format("rawdb-{}", ::getpid());
    scratch_ = true;
    spdlog::warn("no --root or RAWDB_ROOT; using scratch root {}", path_.string());
  }
  ~RootDir() {
    if (!scratch_) return;
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  bool scratch_ = false;
};

QueryOptions query_options(const Globals& g) {
  QueryOptions o;
  o.use_index = parse_use_index(g.use_index);
  o.timeout_ms = g.timeout_ms;
  return o;
}

std::unique_ptr<LocalCluster> open_local(const Globals& g, const fs::path& root, bool http = false) {
  LocalClusterOptions o;
  if (auto saved = LocalCluster::saved_layout(root)) {
    o.nodes = saved->nodes;
    o.replication = saved->replication;
  } else {
    o.nodes = g.nodes;
    o.replication = g.replication;
  }
  o.http = http;
  return std::make_unique<LocalCluster>(root, o);
}

// Runs queries against the coordinator named by --coordinator, or an
// in-process cluster over the block root.
class Session {
 public:
  explicit Session(const Globals& g) : g_(g) {
    if (!g.coordinator.empty() && !g.local) {
      client_ = std::make_unique<CoordinatorClient>(g.coordinator);
    } else {
      root_ = std::make_unique<RootDir>(g.root);
      cluster_ = open_local(g, root_->path());
    }
  }

  QueryResponse run(std::string_view sql, const QueryOptions& options) {
    return client_ ? client_->query(sql, options) : cluster_->query(sql, options);
  }

  std::string tables_json() {
    if (client_) return client_->tables_json();
    std::string out;
    for (const auto& t : cluster_->catalog().tables()) {
      out += fmt::format("{} ({} rows, {} blocks, {} attrs)\n", t->name, t->record_count(),
                         t->data_blocks.size(), t->schema.size());
    }
    return out;
  }

 private:
  const Globals& g_;
  std::unique_ptr<CoordinatorClient> client_;
  std::unique_ptr<RootDir> root_;
  std::unique_ptr<LocalCluster> cluster_;
};

void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("received signal {}, shutting down", sig);
}

void block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

// ---- subcommands ----

int cmd_datagen(std::uint64_t rows, std::uint32_t attrs, std::uint64_t max_value, std::uint64_t seed,
                const std::string& out) {
  if (out.empty() || out == "-") {
    datagen(rows, attrs, max_value, seed, std::cout);
  } else {
    datagen_file(rows, attrs, max_value, seed, out);
    std::cerr << fmt::format("wrote {} rows x {} attrs to {}\n", rows, attrs, out);
  }
  return kExitOk;
}

struct DecorateArgs {
  std::string csv;
  std::string table;
  std::string schema;
  std::uint32_t attrs = 0;
  std::uint64_t max_value = 0;
  std::string config_file;
};

int cmd_decorate(const Globals& g, const DecorateArgs& a) {
  Schema schema;
  if (!a.schema.empty()) {
    schema = Schema::parse(a.schema);
  } else if (a.attrs > 0) {
    schema = a.max_value > 0 ? generated_schema(a.attrs, a.max_value) : Schema::uniform_int(a.attrs);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "decorate needs --schema or --attrs");
  }
  DecoratorConfig config;
  if (!a.config_file.empty()) {
    config = DecoratorConfig::load(a.config_file, schema);
  } else {
    config.pm = parse_pm_rate(g.pm_rate);
    config.vi_attrs = parse_attr_list(g.vi_attrs, schema);
    if (!g.stats_attrs.empty()) config.stats = StatsConfig{parse_attr_list(g.stats_attrs, schema)};
    config.target_block_size = parse_byte_size(g.block_size);
  }
  config.validate(schema);

  TableDescriptor table;
  if (!g.coordinator.empty() && !g.local) {
    if (g.root.empty()) throw Error(ErrorCode::kInvalidArgument, "remote decorate needs the shared --root");
    CoordinatorClient client(g.coordinator);
    std::vector<NodeId> live;
    NodeId max_id = 0;
    for (const auto& n : client.nodes()) {
      max_id = std::max(max_id, n.id);
      if (n.state == NodeState::kLive) live.push_back(n.id);
    }
    if (live.empty()) throw Error(ErrorCode::kUnavailable, "no live workers");
    BlockStore store(g.root, max_id + 1);
    HttpTableRegistry registry(g.coordinator);
    WriteTarget target{&store, std::min<std::uint32_t>(g.replication, static_cast<std::uint32_t>(live.size())),
                       live, &registry};
    table = decorate_existing(a.csv, a.table, schema, config, target);
  } else {
    RootDir root(g.root);
    auto cluster = open_local(g, root.path());
    table = decorate_existing(a.csv, a.table, schema, config, cluster->write_target());
  }
  std::cout << fmt::format("table {}: {} rows in {} blocks ({} bytes), pm={} vi=[{}] stats={}\n", table.name,
                           table.record_count(), table.data_blocks.size(), table.byte_count(),
                           table.has_pm() ? "yes" : "no", fmt::join(table.key_attrs, ","),
                           table.stats ? "yes" : "no");
  return kExitOk;
}

int cmd_query(const Globals& g, const std::string& sql, bool show_report) {
  Session session(g);
  const auto response = session.run(sql, query_options(g));
  print_result(response, parse_output_format(g.format), std::cout);
  if (parse_output_format(g.format) != OutputFormat::kJson) {
    std::cerr << fmt::format("({} row{}, {:.2f} ms)\n", response.result.rows.size(),
                             response.result.rows.size() == 1 ? "" : "s", response.report.latency_ms);
  }
  if (show_report) print_report(response.report, std::cerr);
  return kExitOk;
}

int cmd_shell(const Globals& g) {
  Session session(g);
  QueryOptions options = query_options(g);
  bool timing = false;
  bool report = false;
  const bool interactive = ::isatty(0);
  std::string buffer;
  std::string line;
  auto prompt = [&] {
    if (interactive) std::cout << (buffer.empty() ? "rawdb> " : "  ...> ") << std::flush;
  };
  prompt();
  while (std::getline(std::cin, line)) {
    const auto trimmed = line.substr(0, line.find_last_not_of(" \t\r") + 1);
    if (buffer.empty() && !trimmed.empty() && trimmed[0] == '\\') {
      if (trimmed == "\\q") break;
      if (trimmed == "\\timing") {
        timing = !timing;
        std::cout << "timing " << (timing ? "on" : "off") << '\n';
      } else if (trimmed == "\\report") {
        report = !report;
        std::cout << "report " << (report ? "on" : "off") << '\n';
      } else if (trimmed == "\\d") {
        std::cout << session.tables_json() << '\n';
      } else {
        std::cout << "commands: \\timing \\report \\d \\q\n";
      }
      prompt();
      continue;
    }
    buffer += line;
    buffer += '\n';
    if (trimmed.empty() || trimmed.back() != ';') {
      prompt();
      continue;
    }
    try {
      const Statement stmt = parse_statement(buffer);
      if (stmt.is_set()) {
        options.apply(std::get<SetStatement>(stmt.body));
        std::cout << "SET\n";
      } else {
        const auto response = session.run(buffer, options);
        print_result(response, parse_output_format(g.format), std::cout);
        if (timing) std::cout << fmt::format("Time: {:.3f} ms\n", response.report.latency_ms);
        if (report) print_report(response.report, std::cout);
      }
    } catch (const Error& e) {
      std::cout << "ERROR (" << error_code_name(e.code()) << "): " << e.what() << '\n';
    }
    buffer.clear();
    prompt();
  }
  return kExitOk;
}

struct ServeArgs {
  std::string role = "local";
  std::string host = "127.0.0.1";
  int port = 0;
  NodeId node_id = 0;
  std::uint32_t executors = 0;
  bool allow_kill = false;
  std::string advertise;
};

int cmd_serve(const Globals& g, const ServeArgs& a) {
  block_signals();
  RootDir root(g.root);
  if (a.role == "coordinator") {
    auto catalog = std::make_shared<Catalog>(root.path());
    spdlog::info("loaded {} table(s) from {}", catalog->load(), root.path().string());
    CoordinatorOptions co;
    co.allow_kill = a.allow_kill;
    Coordinator coordinator(catalog, std::make_shared<HttpTransport>(catalog), co);
    CoordinatorServer server(coordinator, a.host, a.port);
    std::cout << "coordinator listening on " << server.url() << std::endl;
    wait_for_signal();
    return kExitOk;
  }
  if (a.role == "worker") {
    if (g.coordinator.empty()) throw Error(ErrorCode::kInvalidArgument, "a worker needs --coordinator");
    WorkerOptions wo;
    wo.executors = a.executors;
    auto worker = Worker::open(a.node_id, root.path(), wo);
    WorkerServer server(*worker, a.host, a.port);
    const std::string url = a.advertise.empty() ? server.url() : a.advertise;
    HeartbeatAgent agent(g.coordinator, *worker, url);
    std::cout << fmt::format("worker {} listening on {}", a.node_id, url) << std::endl;
    wait_for_signal();
    return kExitOk;
  }
  if (a.role == "local") {
    LocalClusterOptions o;
    if (auto saved = LocalCluster::saved_layout(root.path())) {
      o.nodes = saved->nodes;
      o.replication = saved->replication;
    } else {
      o.nodes = g.nodes;
      o.replication = g.replication;
    }
    o.http = true;
    o.coordinator.allow_kill = a.allow_kill;
    o.worker.executors = a.executors;
    LocalCluster cluster(root.path(), o);
    std::cout << "coordinator listening on " << *cluster.coordinator_url() << std::endl;
    wait_for_signal();
    return kExitOk;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown role '{}'", a.role));
}

struct BenchArgs {
  std::string workload = "random_pm";
  std::uint32_t queries = 50;
  std::uint64_t rows = 100000;
  std::uint32_t attrs = 150;
  std::uint64_t max_value = kDefaultMaxValue;
  double selectivity = 1e-4;
  std::vector<std::string> pm_rates;
  std::vector<std::uint64_t> scales;
  std::vector<double> selectivities;
  std::uint32_t key_attr = 0;
  std::string out;
  bool no_oracle = false;
};

int cmd_bench(const Globals& g, const BenchArgs& a) {
  bench::BenchSpec spec;
  spec.workload = bench::parse_workload(a.workload);
  spec.queries = a.queries;
  spec.rows = a.rows;
  spec.attrs = a.attrs;
  spec.max_value = a.max_value;
  spec.selectivity = a.selectivity;
  spec.pm_rates = a.pm_rates;
  spec.scales = a.scales;
  spec.selectivities = a.selectivities;
  spec.key_attr = a.key_attr;
  spec.seed = g.seed;
  spec.block_size = parse_byte_size(g.block_size);
  spec.oracle_gate = !a.no_oracle;

  auto progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
  bench::BenchReport report;
  if (!g.coordinator.empty() && !g.local) {
    if (g.root.empty()) throw Error(ErrorCode::kInvalidArgument, "remote bench needs the shared --root");
    bench::RemoteBenchTarget target(g.coordinator, g.root, g.replication);
    report = bench::run_bench(spec, target, progress);
  } else {
    RootDir root(g.root);
    auto cluster = open_local(g, root.path());
    bench::LocalBenchTarget target(*cluster);
    report = bench::run_bench(spec, target, progress);
  }
  if (a.out.empty() || a.out == "-") {
    bench::write_csv(report, std::cout);
  } else {
    std::ofstream out(a.out);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + a.out);
    bench::write_csv(report, out);
  }
  bench::write_summary(report, std::cerr);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rawdb: SQL over raw CSV blocks with positional maps and vertical indexes"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--root", g.root, "Block store root")->envname("RAWDB_ROOT");
  app.add_option("--coordinator", g.coordinator, "Coordinator URL, e.g. http://127.0.0.1:7070");
  app.add_flag("--local", g.local, "Single-process mode: coordinator and workers in this process");
  app.add_option("--nodes", g.nodes, "Workers of a new local cluster")->check(CLI::Range(1u, 1024u));
  app.add_option("--replication", g.replication, "Replication factor of new tables")->check(CLI::Range(1u, 1024u));
  app.add_option("--seed", g.seed, "Seed for data and query generation");
  app.add_option("--block-size", g.block_size, "Target data block size (K/M/G suffixes)");
  app.add_option("--pm-rate", g.pm_rate, "Positional map sampling rate: 1/k, 0 or none");
  app.add_option("--vi-attrs", g.vi_attrs, "Vertical index keys (names or indices)");
  app.add_option("--stats-attrs", g.stats_attrs, "Attributes with distinct-count statistics");
  app.add_option("--timeout-ms", g.timeout_ms, "Per-fragment redirection timeout (0: adaptive)");
  app.add_option("--use-index", g.use_index, "Vertical index use")->check(CLI::IsMember({"auto", "on", "off"}));
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"table", "csv", "json"}));
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  std::uint64_t dg_rows = 0;
  std::uint32_t dg_attrs = 0;
  std::uint64_t dg_max = kDefaultMaxValue;
  std::string dg_out;
  auto* datagen_cmd = app.add_subcommand("datagen", "Generate a uniform integer CSV file");
  datagen_cmd->add_option("--rows", dg_rows, "Rows")->required()->check(CLI::PositiveNumber);
  datagen_cmd->add_option("--attrs", dg_attrs, "Attributes per row")->required()->check(CLI::PositiveNumber);
  datagen_cmd->add_option("--max", dg_max, "Values are drawn from [0, max)")->check(CLI::PositiveNumber);
  datagen_cmd->add_option("-o,--out", dg_out, "Output file ('-' for stdout)");

  DecorateArgs dec;
  auto* decorate_cmd = app.add_subcommand("decorate", "Ingest a CSV file and build its metadata");
  decorate_cmd->add_option("csv", dec.csv, "CSV file")->required()->check(CLI::ExistingFile);
  decorate_cmd->add_option("--table", dec.table, "Table name")->required();
  decorate_cmd->add_option("--schema", dec.schema, "name:type,... (types int64, float64, text)");
  decorate_cmd->add_option("--attrs", dec.attrs, "Integer columns a0..a{n-1} instead of --schema");
  decorate_cmd->add_option("--max", dec.max_value, "Value range [0, max) of --attrs columns");
  decorate_cmd->add_option("--config", dec.config_file, "Decorator configuration file")->check(CLI::ExistingFile);

  std::string sql;
  bool show_report = false;
  auto* query_cmd = app.add_subcommand("query", "Run one statement");
  query_cmd->add_option("sql", sql, "SQL text")->required();
  query_cmd->add_flag("--report", show_report, "Print the per-fragment report to stderr");

  auto* shell_cmd = app.add_subcommand("shell", "Interactive SQL shell");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run a cluster role over HTTP");
  serve_cmd->add_option("--role", serve.role, "coordinator, worker or local")
      ->check(CLI::IsMember({"coordinator", "worker", "local"}));
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks one)");
  serve_cmd->add_option("--node-id", serve.node_id, "Worker node id");
  serve_cmd->add_option("--executors", serve.executors, "Concurrent fragments per worker (0: cores-1)");
  serve_cmd->add_option("--advertise", serve.advertise, "Worker URL announced to the coordinator");
  serve_cmd->add_flag("--allow-kill", serve.allow_kill, "Enable POST /v1/nodes/{id}/kill");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark workload and emit per-query CSV");
  bench_cmd->add_option("--workload", bench_args.workload, "Workload")
      ->check(CLI::IsMember({"random_pm", "key_vi", "break_even", "attr_scaling", "size_scaling", "pm_rate_sweep",
                             "topk", "join"}));
  bench_cmd->add_option("--queries", bench_args.queries, "Queries per dataset")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--rows", bench_args.rows, "Rows")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--attrs", bench_args.attrs, "Attributes")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--max", bench_args.max_value, "Value range [0, max)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--selectivity", bench_args.selectivity, "Target predicate selectivity");
  bench_cmd->add_option("--rates", bench_args.pm_rates, "PM rates for the sweep or the PM configuration");
  bench_cmd->add_option("--scales", bench_args.scales, "Arities (attr_scaling) or row counts (size_scaling)");
  bench_cmd->add_option("--selectivities", bench_args.selectivities, "Selectivities for break_even");
  bench_cmd->add_option("--key-attr", bench_args.key_attr, "Indexed attribute");
  bench_cmd->add_option("-o,--out", bench_args.out, "CSV output ('-' for stdout)");
  bench_cmd->add_flag("--no-oracle", bench_args.no_oracle, "Skip the correctness gate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);
  spdlog::set_default_logger(spdlog::stderr_color_mt("rawdb"));
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*datagen_cmd) return cmd_datagen(dg_rows, dg_attrs, dg_max, g.seed, dg_out);
    if (*decorate_cmd) return cmd_decorate(g, dec);
    if (*query_cmd) return cmd_query(g, sql, show_report);
    if (*shell_cmd) return cmd_shell(g);
    if (*serve_cmd) {
      spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
      return cmd_serve(g, serve);
    }
    if (*bench_cmd) return cmd_bench(g, bench_args);
  } catch (const Error& e) {
    std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCluster;
  }
  return kExitUsage;
}

}  // namespace rawdb::cli

int main(int argc, char** argv) { return rawdb::cli::main(argc, argv); }
