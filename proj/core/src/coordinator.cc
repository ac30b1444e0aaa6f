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

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rawdb/cluster.h"
#include "rawdb/error.h"
#include "rawdb/sql.h"

namespace rawdb {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

bool retriable(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnavailable:
    case ErrorCode::kNotHere:
    case ErrorCode::kCorruption:
    case ErrorCode::kIo:
    case ErrorCode::kStorageFull: return true;
    default: return false;
  }
}

struct FragmentState {
  std::vector<NodeId> candidates;
  std::set<NodeId> tried;
  std::set<NodeId> failed;
  std::uint32_t in_flight = 0;
  std::uint32_t dispatches = 0;
  bool hedged = false;
  std::uint64_t last_launch_ms = 0;
  std::string last_error;
  bool done = false;
  PartialResult result;
  NodeId node = 0;
  double latency_ms = 0;
};

struct DispatchState {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<FragmentState> frags;
  std::size_t done = 0;
  std::uint32_t retries = 0;
  std::uint32_t hedges = 0;
  std::uint32_t duplicates = 0;
  std::optional<Error> fatal;
};

std::vector<NodeId> candidate_nodes(const BlockLocation& loc) {
  std::vector<NodeId> out;
  for (const auto& r : loc.candidates) out.push_back(r.node);
  return out;
}

}  // namespace

// Runs each task on an idle thread, starting a new one when none is idle,
// so a stuck attempt never delays a hedge.
struct Coordinator::AttemptPool {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::function<void()>> tasks;
  std::size_t idle = 0;
  bool stop = false;
  std::vector<std::thread> threads;

  ~AttemptPool() {
    {
      std::lock_guard lock(mu);
      stop = true;
    }
    cv.notify_all();
    for (auto& t : threads) t.join();
  }

  void submit(std::function<void()> task) {
    std::lock_guard lock(mu);
    tasks.push_back(std::move(task));
    if (idle >= tasks.size()) {
      cv.notify_one();
    } else {
      threads.emplace_back([this] { run(); });
    }
  }

  void run() {
    std::unique_lock lock(mu);
    for (;;) {
      ++idle;
      cv.wait(lock, [&] { return stop || !tasks.empty(); });
      --idle;
      if (tasks.empty()) return;
      auto task = std::move(tasks.front());
      tasks.pop_front();
      lock.unlock();
      task();
      lock.lock();
    }
  }
};

Coordinator::Coordinator(std::shared_ptr<Catalog> catalog, std::shared_ptr<WorkerTransport> transport,
                         CoordinatorOptions options)
    : catalog_(std::move(catalog)),
      transport_(std::move(transport)),
      options_(options),
      pool_(std::make_unique<AttemptPool>()) {}

Coordinator::~Coordinator() {
  std::unique_lock lock(attempts_mu_);
  attempts_cv_.wait(lock, [&] { return attempts_outstanding_ == 0; });
}

double Coordinator::current_timeout_ms(const QueryOptions& options) const {
  if (options.timeout_ms > 0) return static_cast<double>(options.timeout_ms);
  std::lock_guard lock(latency_mu_);
  if (latencies_.empty()) return static_cast<double>(options_.initial_timeout_ms);
  std::vector<double> sorted(latencies_.begin(), latencies_.end());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  double median = *mid;
  if (sorted.size() % 2 == 0) {
    median = (median + *std::max_element(sorted.begin(), mid)) / 2;
  }
  return std::max(static_cast<double>(options_.hedge_floor_ms), options_.hedge_factor * median);
}

void Coordinator::record_latency(double ms) {
  std::lock_guard lock(latency_mu_);
  latencies_.push_back(ms);
  while (latencies_.size() > std::max<std::size_t>(1, options_.latency_window)) latencies_.pop_front();
}

std::uint32_t Coordinator::slots_for(NodeId node) const {
  if (options_.node_slots > 0) return options_.node_slots;
  const auto info = catalog_->node(node);
  return info ? std::max<std::uint32_t>(1, info->executors) : 1;
}

bool Coordinator::try_acquire_slot(NodeId node) {
  const std::uint32_t cap = slots_for(node);
  std::lock_guard lock(slots_mu_);
  auto& used = in_flight_[node];
  if (used >= cap) return false;
  ++used;
  return true;
}

void Coordinator::release_slot(NodeId node) {
  std::lock_guard lock(slots_mu_);
  auto& used = in_flight_[node];
  if (used > 0) --used;
}

Coordinator::PhaseResult Coordinator::dispatch(const std::string& phase, const TableDescriptor& table,
                                               std::vector<FragmentRequest> fragments,
                                               const QueryOptions& options) {
  const auto requests = std::make_shared<const std::vector<FragmentRequest>>(std::move(fragments));
  const std::size_t n = requests->size();
  auto state = std::make_shared<DispatchState>();
  state->frags.resize(n);

  const auto locations = catalog_->lookup_locations(table.name);
  std::vector<std::string> unavailable;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ordinal = (*requests)[i].data_block.id.ordinal;
    if (ordinal >= locations.size() || locations[ordinal].unavailable) {
      unavailable.push_back((*requests)[i].data_block.id.to_string());
      continue;
    }
    state->frags[i].candidates = candidate_nodes(locations[ordinal]);
  }
  if (!unavailable.empty()) {
    throw Error(ErrorCode::kUnavailable,
                fmt::format("no live replica for block(s) {}", fmt::join(unavailable, ", ")));
  }

  auto launch = [&](std::size_t i, NodeId node, bool hedge) {
    auto& f = state->frags[i];
    f.tried.insert(node);
    ++f.in_flight;
    if (f.dispatches++ > 0) {
      ++state->retries;
      if (hedge) {
        f.hedged = true;
        ++state->hedges;
      }
    }
    f.last_launch_ms = monotonic_ms();
    {
      std::lock_guard lock(attempts_mu_);
      ++attempts_outstanding_;
    }
    pool_->submit([this, state, requests, i, node, transport = transport_] {
      const auto start = std::chrono::steady_clock::now();
      PartialResult result;
      std::optional<Error> error;
      try {
        result = transport->execute(node, (*requests)[i]);
      } catch (const Error& e) {
        error = e;
      } catch (const std::exception& e) {
        error = Error(ErrorCode::kUnavailable, e.what());
      }
      const double latency = elapsed_ms(start);
      release_slot(node);
      {
        std::lock_guard lock(state->mu);
        auto& f = state->frags[i];
        --f.in_flight;
        if (!error) {
          if (f.done) {
            ++state->duplicates;
          } else {
            f.done = true;
            f.result = std::move(result);
            f.node = node;
            f.latency_ms = latency;
            ++state->done;
            record_latency(latency);
          }
        } else if (!f.done) {
          if (retriable(error->code())) {
            f.failed.insert(node);
            f.last_error = error->what();
            if (error->code() == ErrorCode::kCorruption) {
              catalog_->exclude_replica((*requests)[i].data_block.id, node);
            }
            spdlog::debug("fragment {} on node {} failed: {}", i, node, error->what());
          } else if (!state->fatal) {
            state->fatal = *error;
          }
        }
        state->cv.notify_all();
      }
      std::lock_guard lock(attempts_mu_);
      --attempts_outstanding_;
      attempts_cv_.notify_all();
    });
  };

  auto next_candidate = [&](const FragmentState& f) -> std::optional<NodeId> {
    for (NodeId c : f.candidates) {
      if (!f.tried.count(c) && !f.failed.count(c)) return c;
    }
    return std::nullopt;
  };

  std::unique_lock lock(state->mu);
  while (!state->fatal && state->done < n) {
    const double timeout = current_timeout_ms(options);
    const std::uint64_t now = monotonic_ms();
    std::uint64_t wake = now + 20;
    for (std::size_t i = 0; i < n && !state->fatal; ++i) {
      auto& f = state->frags[i];
      if (f.done) continue;
      if (f.dispatches == 0) {
        if (try_acquire_slot(f.candidates.front())) launch(i, f.candidates.front(), false);
        continue;
      }
      if (f.in_flight == 0) {
        auto next = next_candidate(f);
        if (!next) {
          // Every known replica failed: refresh from the catalog once more.
          const auto fresh = catalog_->lookup_locations(table.name);
          const auto ordinal = (*requests)[i].data_block.id.ordinal;
          if (ordinal < fresh.size()) {
            for (NodeId c : candidate_nodes(fresh[ordinal])) {
              if (std::find(f.candidates.begin(), f.candidates.end(), c) == f.candidates.end()) {
                f.candidates.push_back(c);
              }
            }
          }
          next = next_candidate(f);
        }
        if (!next) {
          state->fatal = Error(ErrorCode::kUnavailable,
                               fmt::format("fragment {} failed on every replica of {}: {}", i,
                                           (*requests)[i].data_block.id.to_string(), f.last_error));
          break;
        }
        if (try_acquire_slot(*next)) launch(i, *next, false);
        continue;
      }
      const auto deadline = f.last_launch_ms + static_cast<std::uint64_t>(timeout);
      if (now >= deadline) {
        if (auto next = next_candidate(f); next && try_acquire_slot(*next)) {
          spdlog::debug("fragment {} exceeded {:.0f} ms; redirecting to node {}", i, timeout, *next);
          launch(i, *next, true);
        }
      } else {
        wake = std::min(wake, deadline);
      }
    }
    if (state->fatal || state->done >= n) break;
    const auto now2 = monotonic_ms();
    state->cv.wait_for(lock, std::chrono::milliseconds(wake > now2 ? wake - now2 : 1));
  }
  if (state->fatal) throw *state->fatal;

  PhaseResult out;
  out.retries = state->retries;
  out.hedges = state->hedges;
  out.duplicates = state->duplicates;
  for (std::size_t i = 0; i < n; ++i) {
    auto& f = state->frags[i];
    FragmentReport rep;
    rep.phase = phase;
    rep.table = table.name;
    rep.fragment_id = static_cast<std::uint32_t>(i);
    rep.ordinal = f.result.ordinal;
    rep.node = f.node;
    rep.latency_ms = f.latency_ms;
    rep.retries = f.dispatches > 0 ? f.dispatches - 1 : 0;
    rep.hedged = f.hedged;
    rep.access = f.result.access;
    rep.pm_used = f.result.pm_used;
    rep.counters = f.result.counters;
    out.reports.push_back(std::move(rep));
    out.partials.push_back(std::move(f.result));
  }
  return out;
}

QueryResponse Coordinator::run_query(std::string_view sql, QueryOptions options) {
  return run_statement(parse_statement(sql), options);
}

QueryResponse Coordinator::run_statement(const Statement& statement, QueryOptions options) {
  const auto start = std::chrono::steady_clock::now();
  QueryResponse response;
  if (statement.is_set()) {
    const auto& set = std::get<SetStatement>(statement.body);
    options.apply(set);
    response.result.columns = {"name", "value"};
    response.result.column_types = {AttrType::kText, AttrType::kText};
    response.result.rows.push_back({Value(set.name), Value(set.value)});
    return response;
  }

  const std::string query_id = fmt::format("q{}-{}", wall_ms(), next_query_++);
  response.report.query_id = query_id;
  const TableLookup lookup = [this](std::string_view name) { return catalog_->table(name); };
  const PhysicalPlan plan = plan_query(statement.select(), lookup, options);
  response.report.plan = explain_plan(plan);

  if (statement.explain) {
    response.result.columns = {"plan"};
    response.result.column_types = {AttrType::kText};
    for (const auto& line : response.report.plan) response.result.rows.push_back({Value(line)});
    response.report.latency_ms = elapsed_ms(start);
    return response;
  }

  auto absorb = [&](PhaseResult& phase) {
    response.report.retries += phase.retries;
    response.report.hedges += phase.hedges;
    response.report.duplicates_dropped += phase.duplicates;
    for (auto& f : phase.reports) {
      response.report.counters += f.counters;
      response.report.fragments.push_back(std::move(f));
    }
  };

  std::optional<JoinProbe> join;
  if (plan.build) {
    auto fragments = make_fragments(*plan.build, build_phase_operator(), query_id + "/build", options);
    const std::size_t expected = fragments.size();
    PhaseResult build = dispatch("build", *plan.build->table, std::move(fragments), options);
    JoinProbe probe;
    probe.probe_key = plan.probe_key;
    probe.build_key = plan.build_key;
    probe.build_rows = collect_build_rows(std::move(build.partials), expected);
    join = std::move(probe);
    absorb(build);
  }

  auto fragments = make_fragments(plan.probe, plan.op, query_id, options, join);
  const std::size_t expected = fragments.size();
  PhaseResult scan = dispatch("scan", *plan.probe.table, std::move(fragments), options);
  response.result = merge_partials(plan, std::move(scan.partials), expected);
  absorb(scan);
  response.report.latency_ms = elapsed_ms(start);
  return response;
}

std::vector<BlockId> Coordinator::register_worker(NodeId id, std::string address,
                                                  std::uint32_t executors,
                                                  std::optional<std::uint64_t> capacity) {
  const bool restart = catalog_->register_node(id, std::move(address), executors, capacity);
  if (!restart || options_.revalidation_sample == 0) return {};

  std::vector<BlockMeta> held;
  for (const auto& table : catalog_->tables()) {
    for (const auto* list : {&table->data_blocks, &table->pm_blocks, &table->vi_blocks}) {
      for (const auto& b : *list) {
        if (b.has_replica_on(id)) held.push_back(b);
      }
    }
  }
  std::vector<BlockMeta> sample;
  std::mt19937_64 rng(id);
  std::sample(held.begin(), held.end(), std::back_inserter(sample), options_.revalidation_sample, rng);
  if (sample.empty()) return {};

  std::vector<BlockId> failed;
  try {
    failed = transport_->verify(id, sample);
  } catch (const Error& e) {
    spdlog::warn("revalidation of node {} failed: {}", id, e.what());
    return {};
  }
  for (const auto& block : failed) {
    spdlog::warn("node {} holds a corrupt replica of {}", id, block.to_string());
    catalog_->exclude_replica(block.sibling(BlockKind::kData), id);
  }
  return failed;
}

void Coordinator::kill_node(NodeId id) {
  if (!options_.allow_kill) {
    throw Error(ErrorCode::kPrecondition, "fault injection is disabled on this coordinator");
  }
  if (!catalog_->node(id)) throw Error(ErrorCode::kNotFound, fmt::format("unknown node {}", id));
  try {
    transport_->kill(id);
  } catch (const Error& e) {
    spdlog::warn("kill of node {}: {}", id, e.what());
  }
  catalog_->mark_dead(id);
}

}  // namespace rawdb
