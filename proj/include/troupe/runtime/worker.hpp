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

#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <latch>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "troupe/api/api.hpp"
#include "troupe/clock.hpp"
#include "troupe/kv/store.hpp"
#include "troupe/model/ids.hpp"
#include "troupe/model/records.hpp"
#include "troupe/runtime/channel.hpp"
#include "troupe/runtime/commit.hpp"
#include "troupe/runtime/events.hpp"
#include "troupe/runtime/passivation.hpp"

namespace troupe::runtime {

struct WorkerConfig {
  std::string worker_id;
  int64_t polling_interval_ms = 500;
  int max_active_shards = 64;
  int processing_slots = 2;
  // An empty poll parks the shard once it has been quiet this long.
  int64_t park_after_idle_ms = 2000;
  // Parked this long starts passivation.
  int64_t parking_threshold_ms = 10000;
  int64_t lease_duration_ms = 10000;
  int64_t heartbeat_interval_ms = 2000;
  int max_message_retries = 3;
  // Mean dispatch-queue wait above this releases a shard to other workers.
  int64_t release_queue_threshold_ms = 60000;
  uint64_t seed = 0;  // envelope unique ids

  void validate() const;  // throws std::invalid_argument
};

// Test instrumentation. stall_until_us simulates a zombie: every worker loop
// pauses until the given clock time, with leases expiring meanwhile.
struct WorkerHooks {
  bool disable_fencing = false;
  std::shared_ptr<std::atomic<int64_t>> stall_until_us;
  PassivationProbe passivation_probe;
};

// One worker process: claims shards, polls their inboxes, executes actors,
// commits effects exactly-once, parks and passivates idle shards, heartbeats
// a lease, and frees shards of crashed peers.
//
// Internal structure: a puller loop claims free shards; a scheduler loop owns
// all per-shard state and timing; processing slots drain dispatched shards.
// The loops communicate only through channels; a shard handle is touched by
// exactly one loop at a time (the scheduler, or the slot it was dispatched
// to).
class Worker {
public:
  Worker(Clock& clock, kv::Store& store, const api::Registry& registry,
         WorkerConfig cfg, EventLog* events = nullptr, WorkerHooks hooks = {});
  ~Worker();

  Worker(const Worker&) = delete;
  Worker& operator=(const Worker&) = delete;

  void start();
  // Graceful: stop claiming, finish in-flight work, release shards, stop.
  void request_stop();
  // Abrupt crash for tests: loops exit without further storage writes.
  void kill();
  void join();

  // No dispatched shards and no queued control work.
  bool idle() const;
  // Release up to count owned, currently idle shards (asynchronous).
  void release_shards(int count);

  const std::string& worker_id() const { return cfg_.worker_id; }
  const WorkerConfig& config() const { return cfg_; }

  // Deterministic poll alignment: shard polls happen at times t with
  // t = phase (mod interval), so latency tests can place injections exactly.
  static int64_t poll_phase_us(const model::ShardRef& shard,
                               int64_t interval_us);

private:
  enum class Phase { Running, Parked, Dispatched };

  struct ShardHandle {
    model::ShardRef ref;
    Phase phase = Phase::Running;
    std::deque<model::MessageEnvelope> pending;
    std::map<std::string, api::ActorInstance> actors;  // canonical actor id
    std::map<std::string, int> attempts;               // envelope unique_id
    int64_t next_poll_us = 0;
    int64_t last_activity_us = 0;
    int64_t parked_since_us = 0;
    int64_t dispatched_at_us = 0;
  };

  struct ClaimedMsg {
    model::ShardRef ref;
  };
  struct SlotReportMsg {
    ShardHandle* handle = nullptr;
    bool lost = false;
    int64_t queue_wait_us = 0;
  };
  struct ReleaseMsg {
    int count = 0;
  };
  using ControlMsg = std::variant<ClaimedMsg, SlotReportMsg, ReleaseMsg>;

  enum class ProcessResult {
    Committed,
    Transient,   // storage transient failure, retryable
    AppError,    // handler/decode/conflict failure, retryable then dead-letter
    Permanent,   // dead-letter without further retries
    Lost,        // shard ownership gone
    Halted,      // worker killed mid-flight
  };

  void puller_main();
  void heartbeat_main();
  void scheduler_main();
  void slot_main();

  void pull_once();
  void heartbeat_once();

  void handle_control(ControlMsg& msg);
  void act_on_due_shards();
  void poll_shard(ShardHandle& h);
  void passivate_parked(ShardHandle& h);
  void release_idle_shards(int count);
  void drop_handle(const std::string& key);
  int64_t next_wake_us() const;

  void drain_shard(ShardHandle& h);
  std::pair<ProcessResult, std::string> process_one(
      ShardHandle& h, const model::MessageEnvelope& env, int attempt);
  ProcessResult dead_letter(const model::MessageEnvelope& env,
                            const std::string& reason, int attempts);

  std::pair<int64_t, std::string> stamp_sender(const std::string& sender_id);
  int64_t next_aligned_tick(const model::ShardRef& ref, int64_t interval_us,
                            int64_t after_us) const;
  void maybe_stall();
  bool halted() const { return killed_.load(); }
  void emit(EventKind kind, const std::string& shard,
            const std::string& detail = "", int64_t attempts = 0);

  Clock& clock_;
  kv::Store& store_;
  const api::Registry& registry_;
  WorkerConfig cfg_;
  EventLog* events_;
  WorkerHooks hooks_;

  Channel<ControlMsg> ctrl_;
  Channel<ShardHandle*> work_;
  Channel<std::monostate> puller_wake_;
  Channel<std::monostate> heartbeat_wake_;

  // Written only by the scheduler thread; a dispatched handle is borrowed by
  // exactly one slot until its report returns. Outlives all threads.
  std::map<std::string, std::unique_ptr<ShardHandle>> shards_;

  std::atomic<bool> started_{false};
  std::atomic<bool> stopping_{false};
  std::atomic<bool> killed_{false};
  std::atomic<bool> joined_{false};
  std::atomic<bool> puller_done_{false};
  std::atomic<bool> scheduler_done_{false};
  // Ownership is only recoverable through the lease record, so no shard may
  // be claimed before the first heartbeat write is known durable.
  std::atomic<bool> lease_ready_{false};
  // Loops report their exit here; join() watches it while sleeping on the
  // clock, because a raw thread join would stall a virtual clock that the
  // exiting loops still need.
  std::atomic<int> exited_mains_{0};
  std::atomic<int> owned_count_{0};
  std::atomic<int> dispatched_count_{0};

  // Shards this worker believes it owns; keeps the puller from re-claiming a
  // shard whose handle still exists.
  mutable std::mutex owned_mutex_;
  std::set<std::string> owned_refs_;

  std::mutex sender_mutex_;
  std::map<std::string, model::SenderTimestamps> sender_clocks_;
  std::mt19937_64 unique_rng_;

  double queue_wait_ewma_us_ = 0.0;

  // start() returns only once every loop is attached to the clock, so a
  // virtual clock never advances past a thread that has not begun waiting.
  std::latch attach_latch_;

  std::thread puller_thread_;
  std::thread heartbeat_thread_;
  std::thread scheduler_thread_;
  std::vector<std::thread> slot_threads_;
};

}  // namespace troupe::runtime
