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
//
// Shared infrastructure for closed-loop scenario runs: owns the clock, the
// store (with history recording on), a pool of workers, and a fault timeline
// of worker kills, zombie stalls, and respawns. Scenarios drive injection
// through run_timeline and then await replies or full quiescence.

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "troupe/api/api.hpp"
#include "troupe/clock.hpp"
#include "troupe/harness/oracles.hpp"
#include "troupe/harness/report.hpp"
#include "troupe/kv/store.hpp"
#include "troupe/runtime/events.hpp"
#include "troupe/runtime/worker.hpp"

namespace troupe::harness {

// A worker process freezing mid-flight (GC pause, VM migration) and waking
// up after its lease expired.
struct StallSpec {
  int64_t at_ms = 0;
  int64_t duration_ms = 0;
};

struct ChaosSchedule {
  // Each entry kills one randomly chosen live worker at that run time.
  std::vector<int64_t> kill_at_ms;
  bool respawn = true;
  int64_t respawn_delay_ms = 1000;
  std::vector<StallSpec> stalls;

  bool empty() const { return kill_at_ms.empty() && stalls.empty(); }
};

struct ScenarioConfig {
  std::string scenario = "banking";
  int workers = 2;
  int requests = 600;
  uint64_t seed = 1;
  bool fake_clock = true;
  int64_t inject_spacing_us = 5000;
  int64_t run_timeout_us = 120'000'000;
  bool quiesce_at_end = true;

  // banking
  int banks = 8;
  int accounts = 300;
  int64_t initial_balance = 1000;

  // hotel
  int hotels = 10;
  int users = 20;
  int days = 10;
  int rooms_per_type = 3;

  // fifo: `senders` clients send `requests` messages each.
  int senders = 10;

  // Worker knobs; worker_id is assigned per spawned worker.
  runtime::WorkerConfig worker;

  // Store fault injection.
  double store_transient_p = 0.0;
  int64_t store_latency_min_us = 0;
  int64_t store_latency_max_us = 0;

  ChaosSchedule chaos;

  // Removes the commit-time ownership guards; exists so the fault harness
  // can demonstrate they are load-bearing.
  bool disable_fencing = false;

  std::string report_path;

  ScenarioConfig() {
    worker.polling_interval_ms = 100;
    worker.processing_slots = 1;
    worker.park_after_idle_ms = 500;
    worker.parking_threshold_ms = 500;
    worker.lease_duration_ms = 2000;
    worker.heartbeat_interval_ms = 600;
    worker.max_message_retries = 20;
  }
};

struct ScenarioResult {
  bool ok = false;
  std::vector<std::string> failures;

  int requests = 0;
  int replies = 0;
  int64_t duration_us = 0;
  double throughput_per_s = 0;
  LatencyStats latency;

  int64_t committed = 0;
  int64_t retried = 0;
  int64_t dead_lettered = 0;
  int64_t claims = 0;
  int64_t reclaims = 0;
  int64_t kills = 0;

  api::Json to_json() const;
};

class ScenarioHarness {
public:
  // The constructing thread becomes the driver: it is attached to the clock
  // for the harness lifetime and must also be the destroying thread.
  ScenarioHarness(const ScenarioConfig& cfg, api::Registry registry);
  ~ScenarioHarness();

  ScenarioHarness(const ScenarioHarness&) = delete;
  ScenarioHarness& operator=(const ScenarioHarness&) = delete;

  Clock& clock() { return *clock_; }
  kv::Store& store() { return store_; }
  const api::Registry& registry() const { return registry_; }
  runtime::EventLog& events() { return events_; }
  const ScenarioConfig& config() const { return cfg_; }

  void start_workers();

  // Calls inject(j) for each request at its spacing on the run timeline,
  // firing due chaos events in between.
  void run_timeline(int requests, const std::function<void(int)>& inject);

  // Polls pred while pumping chaos; true when pred held before the timeout.
  bool await(const std::function<bool()>& pred, int64_t timeout_us);

  // All inboxes empty, no task records, all live workers idle, stable for
  // two polling intervals.
  bool await_quiescence(int64_t timeout_us);

  bool all_idle() const;
  size_t outbox_size();

  void stop_workers();  // graceful stop + join of every live worker

  // Chaos bookkeeping for the result.
  int64_t kills() const { return kills_; }

  // Fills counters and latency from the event log and samples, runs the
  // history oracles, writes the report file when configured.
  ScenarioResult finish(const std::vector<LatencySample>& samples,
                        OracleReport scenario_checks,
                        int64_t duration_us_hint = -1);

private:
  struct Slot {
    std::unique_ptr<runtime::Worker> worker;
    std::shared_ptr<std::atomic<int64_t>> stall;
    bool dead = false;
  };

  runtime::Worker& spawn_worker();
  void kill_one();
  void pump_chaos();

  ScenarioConfig cfg_;
  api::Registry registry_;
  std::unique_ptr<Clock> clock_;
  std::unique_ptr<ClockThreadGuard> guard_;
  kv::Store store_;
  runtime::EventLog events_;

  std::vector<Slot> workers_;
  int spawned_ = 0;
  std::mt19937_64 chaos_rng_;

  std::vector<int64_t> kill_times_us_;  // sorted ascending
  size_t next_kill_ = 0;
  std::vector<StallSpec> stalls_;  // sorted by at_ms
  size_t next_stall_ = 0;
  std::vector<int64_t> respawns_due_us_;
  int64_t kills_ = 0;
  int64_t run_start_us_ = 0;
};

}  // namespace troupe::harness
