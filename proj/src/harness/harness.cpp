// Copyright 2026-present the troupe authors.
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

#include "troupe/harness/harness.hpp"

#include <algorithm>

#include "troupe/model/records.hpp"

namespace troupe::harness {

namespace {

std::unique_ptr<Clock> make_clock(bool fake) {
  if (fake) return std::make_unique<VirtualClock>(0);
  return std::make_unique<RealClock>();
}

}  // namespace

api::Json ScenarioResult::to_json() const {
  return api::Json{{"ok", ok},
                   {"failures", failures},
                   {"requests", requests},
                   {"replies", replies},
                   {"duration_us", duration_us},
                   {"throughput_per_s", throughput_per_s},
                   {"latency", harness::to_json(latency)},
                   {"committed", committed},
                   {"retried", retried},
                   {"dead_lettered", dead_lettered},
                   {"claims", claims},
                   {"reclaims", reclaims},
                   {"kills", kills}};
}

ScenarioHarness::ScenarioHarness(const ScenarioConfig& cfg,
                                 api::Registry registry)
    : cfg_(cfg),
      registry_(std::move(registry)),
      clock_(make_clock(cfg.fake_clock)),
      guard_(std::make_unique<ClockThreadGuard>(*clock_)),
      store_(*clock_, kv::StoreConfig{100, /*record_history=*/true}),
      chaos_rng_(cfg.seed * 0x9e3779b97f4a7c15ULL + 1) {
  {
    runtime::WorkerConfig probe = cfg_.worker;
    probe.worker_id = "w0";
    probe.validate();
  }
  for (const auto& schema :
       model::runtime_schemas(registry_.collection_decls())) {
    store_.create_table(schema);
  }
  for (int64_t at_ms : cfg_.chaos.kill_at_ms) {
    kill_times_us_.push_back(at_ms * 1000);
  }
  std::sort(kill_times_us_.begin(), kill_times_us_.end());
  stalls_ = cfg_.chaos.stalls;
  std::sort(stalls_.begin(), stalls_.end(),
            [](const StallSpec& a, const StallSpec& b) {
              return a.at_ms < b.at_ms;
            });
}

ScenarioHarness::~ScenarioHarness() {
  for (auto& s : workers_) {
    if (s.worker && !s.dead) {
      s.worker->kill();
      s.worker->join();
    }
  }
}

runtime::Worker& ScenarioHarness::spawn_worker() {
  Slot slot;
  runtime::WorkerConfig wc = cfg_.worker;
  wc.worker_id = "w" + std::to_string(spawned_);
  wc.seed = cfg_.seed ^ (0x5bd1e995ULL * static_cast<uint64_t>(spawned_ + 1));
  spawned_ += 1;
  runtime::WorkerHooks hooks;
  hooks.disable_fencing = cfg_.disable_fencing;
  slot.stall = std::make_shared<std::atomic<int64_t>>(0);
  hooks.stall_until_us = slot.stall;
  slot.worker = std::make_unique<runtime::Worker>(*clock_, store_, registry_,
                                                  wc, &events_, hooks);
  slot.worker->start();
  workers_.push_back(std::move(slot));
  return *workers_.back().worker;
}

void ScenarioHarness::start_workers() {
  if (cfg_.store_transient_p > 0 || cfg_.store_latency_max_us > 0) {
    kv::FaultPlan plan;
    plan.enabled = true;
    plan.seed = cfg_.seed;
    plan.transient_failure_probability = cfg_.store_transient_p;
    plan.latency_min_us = cfg_.store_latency_min_us;
    plan.latency_max_us = cfg_.store_latency_max_us;
    store_.set_fault_plan(plan);
  }
  for (int i = 0; i < cfg_.workers; ++i) spawn_worker();
  run_start_us_ = clock_->now_us();
}

void ScenarioHarness::kill_one() {
  std::vector<size_t> live;
  for (size_t i = 0; i < workers_.size(); ++i) {
    if (!workers_[i].dead) live.push_back(i);
  }
  if (live.empty()) return;
  size_t idx = live[chaos_rng_() % live.size()];
  workers_[idx].worker->kill();
  workers_[idx].worker->join();
  workers_[idx].dead = true;
  kills_ += 1;
  if (cfg_.chaos.respawn) {
    respawns_due_us_.push_back(clock_->now_us() +
                               cfg_.chaos.respawn_delay_ms * 1000);
  }
}

void ScenarioHarness::pump_chaos() {
  const int64_t now = clock_->now_us();
  while (next_kill_ < kill_times_us_.size() &&
         run_start_us_ + kill_times_us_[next_kill_] <= now) {
    next_kill_ += 1;
    kill_one();
  }
  while (next_stall_ < stalls_.size() &&
         run_start_us_ + stalls_[next_stall_].at_ms * 1000 <= now) {
    const auto& spec = stalls_[next_stall_];
    next_stall_ += 1;
    std::vector<size_t> live;
    for (size_t i = 0; i < workers_.size(); ++i) {
      if (!workers_[i].dead) live.push_back(i);
    }
    if (!live.empty()) {
      size_t idx = live[chaos_rng_() % live.size()];
      workers_[idx].stall->store(now + spec.duration_ms * 1000);
    }
  }
  for (size_t i = 0; i < respawns_due_us_.size();) {
    if (respawns_due_us_[i] <= now) {
      respawns_due_us_.erase(respawns_due_us_.begin() +
                             static_cast<ptrdiff_t>(i));
      spawn_worker();
    } else {
      ++i;
    }
  }
}

void ScenarioHarness::run_timeline(int requests,
                                   const std::function<void(int)>& inject) {
  const int64_t t0 = clock_->now_us();
  for (int j = 0; j < requests; ++j) {
    const int64_t due = t0 + static_cast<int64_t>(j) * cfg_.inject_spacing_us;
    while (clock_->now_us() < due) {
      clock_->sleep_until(std::min(due, clock_->now_us() + 1000));
      pump_chaos();
    }
    pump_chaos();
    inject(j);
  }
}

bool ScenarioHarness::await(const std::function<bool()>& pred,
                            int64_t timeout_us) {
  const int64_t deadline = clock_->now_us() + timeout_us;
  const int64_t step =
      std::min<int64_t>(5000, cfg_.worker.polling_interval_ms * 250 + 1);
  for (;;) {
    pump_chaos();
    if (pred()) return true;
    if (clock_->now_us() >= deadline) return pred();
    clock_->sleep_for_us(step);
  }
}

bool ScenarioHarness::all_idle() const {
  for (const auto& s : workers_) {
    if (!s.dead && !s.worker->idle()) return false;
  }
  return true;
}

size_t ScenarioHarness::outbox_size() {
  return store_.scan(model::kOutboxTable).size();
}

bool ScenarioHarness::await_quiescence(int64_t timeout_us) {
  const int64_t deadline = clock_->now_us() + timeout_us;
  const int64_t stable_needed = 2 * cfg_.worker.polling_interval_ms * 1000;
  const int64_t step = cfg_.worker.polling_interval_ms * 250 + 1;
  int64_t stable_since = -1;
  for (;;) {
    pump_chaos();
    const bool quiet = storage_quiescent(store_) && all_idle() &&
                       respawns_due_us_.empty();
    const int64_t now = clock_->now_us();
    if (quiet) {
      if (stable_since < 0) stable_since = now;
      if (now - stable_since >= stable_needed) return true;
    } else {
      stable_since = -1;
    }
    if (now >= deadline) return false;
    clock_->sleep_for_us(step);
  }
}

void ScenarioHarness::stop_workers() {
  for (auto& s : workers_) {
    if (!s.dead) s.worker->request_stop();
  }
  for (auto& s : workers_) {
    if (!s.dead) {
      s.worker->join();
      s.dead = true;
    }
  }
}

ScenarioResult ScenarioHarness::finish(
    const std::vector<LatencySample>& samples, OracleReport scenario_checks,
    int64_t duration_us_hint) {
  ScenarioResult r;
  r.requests = static_cast<int>(samples.size());
  std::vector<int64_t> lat;
  int64_t first_sent = INT64_MAX;
  int64_t last_reply = -1;
  for (const auto& s : samples) {
    first_sent = std::min(first_sent, s.sent_us);
    if (s.replied_us >= 0) {
      r.replies += 1;
      lat.push_back(s.replied_us - s.sent_us);
      last_reply = std::max(last_reply, s.replied_us);
    }
  }
  r.latency = summarize_latencies(std::move(lat));
  if (duration_us_hint >= 0) {
    r.duration_us = duration_us_hint;
  } else if (last_reply >= 0 && first_sent != INT64_MAX) {
    r.duration_us = last_reply - first_sent;
  }
  if (r.duration_us > 0) {
    r.throughput_per_s = static_cast<double>(r.replies) * 1e6 /
                         static_cast<double>(r.duration_us);
  }

  using runtime::EventKind;
  r.committed = static_cast<int64_t>(events_.count(EventKind::MessageCommitted));
  r.retried = static_cast<int64_t>(events_.count(EventKind::MessageRetried));
  r.dead_lettered =
      static_cast<int64_t>(events_.count(EventKind::MessageDeadLettered));
  r.claims = static_cast<int64_t>(events_.count(EventKind::ShardClaimed));
  r.reclaims = static_cast<int64_t>(events_.count(EventKind::ShardReclaimed));
  r.kills = kills_;

  OracleReport report;
  const auto history = store_.history();
  report.merge(check_exactly_once_consumption(history));
  report.merge(check_single_reply_per_correlation(history));
  report.merge(check_fifo_per_channel(history));
  report.merge(scenario_checks);
  r.failures = report.failures;
  r.ok = report.ok() && r.replies == r.requests;
  if (r.replies != r.requests) {
    r.failures.push_back("missing replies: " + std::to_string(r.requests -
                                                              r.replies) +
                         " of " + std::to_string(r.requests));
  }

  if (!cfg_.report_path.empty()) {
    api::Json summary = r.to_json();
    summary["scenario"] = cfg_.scenario;
    summary["seed"] = cfg_.seed;
    summary["workers"] = cfg_.workers;
    write_report_jsonl(cfg_.report_path, summary, samples);
  }
  return r;
}

}  // namespace troupe::harness
