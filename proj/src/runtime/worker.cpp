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

#include "troupe/runtime/worker.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <limits>
#include <stdexcept>

namespace troupe::runtime {

namespace {

// Parked shards poll at a multiple of the configured cadence.
constexpr int64_t kParkedPollFactor = 4;

WorkerConfig validated(WorkerConfig cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

void WorkerConfig::validate() const {
  if (worker_id.empty())
    throw std::invalid_argument("worker_id must not be empty");
  if (polling_interval_ms <= 0)
    throw std::invalid_argument("polling_interval_ms must be positive");
  if (max_active_shards < 1)
    throw std::invalid_argument("max_active_shards must be at least 1");
  if (processing_slots < 1)
    throw std::invalid_argument("processing_slots must be at least 1");
  if (heartbeat_interval_ms <= 0)
    throw std::invalid_argument("heartbeat_interval_ms must be positive");
  if (lease_duration_ms < 2 * heartbeat_interval_ms)
    throw std::invalid_argument(
        "lease_duration_ms must be at least twice heartbeat_interval_ms");
  if (max_message_retries < 1)
    throw std::invalid_argument("max_message_retries must be at least 1");
  if (park_after_idle_ms < 0)
    throw std::invalid_argument("park_after_idle_ms must not be negative");
  if (parking_threshold_ms < 0)
    throw std::invalid_argument("parking_threshold_ms must not be negative");
  if (release_queue_threshold_ms <= 0)
    throw std::invalid_argument("release_queue_threshold_ms must be positive");
}

Worker::Worker(Clock& clock, kv::Store& store, const api::Registry& registry,
               WorkerConfig cfg, EventLog* events, WorkerHooks hooks)
    : clock_(clock),
      store_(store),
      registry_(registry),
      cfg_(validated(std::move(cfg))),
      events_(events),
      hooks_(std::move(hooks)),
      ctrl_(clock, static_cast<size_t>(cfg_.max_active_shards) * 4 + 16),
      work_(clock, static_cast<size_t>(cfg_.max_active_shards) + 1),
      puller_wake_(clock, 1),
      heartbeat_wake_(clock, 1),
      unique_rng_(cfg_.seed ^ model::stable_hash64(cfg_.worker_id)),
      attach_latch_(3 + cfg_.processing_slots) {}

Worker::~Worker() {
  if (started_.load() && !joined_.load()) {
    kill();
    join();
  }
}

void Worker::start() {
  if (started_.exchange(true)) return;
  emit(EventKind::WorkerStarted, "");
  puller_thread_ = std::thread([this] { puller_main(); });
  heartbeat_thread_ = std::thread([this] { heartbeat_main(); });
  scheduler_thread_ = std::thread([this] { scheduler_main(); });
  slot_threads_.reserve(static_cast<size_t>(cfg_.processing_slots));
  for (int i = 0; i < cfg_.processing_slots; ++i)
    slot_threads_.emplace_back([this] { slot_main(); });
  attach_latch_.wait();
}

void Worker::request_stop() {
  if (stopping_.exchange(true)) return;
  puller_wake_.close();
  // Nudge the scheduler so it notices without waiting out a poll tick.
  ctrl_.try_send(ControlMsg(ReleaseMsg{0}));
}

void Worker::kill() {
  if (killed_.exchange(true)) return;
  stopping_.store(true);
  emit(EventKind::WorkerKilled, "");
  ctrl_.close();
  work_.close();
  puller_wake_.close();
  heartbeat_wake_.close();
}

void Worker::join() {
  if (!started_.load() || joined_.exchange(true)) return;
  // Sleep on the clock, not in the thread join: the exiting loops may still
  // need virtual time (latency sleeps, final poll ticks).
  const int drain_mains = 2 + cfg_.processing_slots;  // puller, scheduler, slots
  while (exited_mains_.load() < drain_mains) clock_.sleep_for_us(500);
  if (puller_thread_.joinable()) puller_thread_.join();
  if (scheduler_thread_.joinable()) scheduler_thread_.join();
  for (auto& t : slot_threads_)
    if (t.joinable()) t.join();
  // The lease outlives the drain so peers do not reclaim shards that are
  // still being released.
  heartbeat_wake_.close();
  while (exited_mains_.load() < drain_mains + 1) clock_.sleep_for_us(500);
  if (heartbeat_thread_.joinable()) heartbeat_thread_.join();
  if (!killed_.load()) emit(EventKind::WorkerStopped, "");
}

bool Worker::idle() const {
  if (dispatched_count_.load() != 0) return false;
  // After the scheduler retires, a stray stop nudge in the control queue no
  // longer means pending work.
  return scheduler_done_.load() || ctrl_.size() == 0;
}

void Worker::release_shards(int count) {
  if (count > 0) ctrl_.try_send(ControlMsg(ReleaseMsg{count}));
}

int64_t Worker::poll_phase_us(const model::ShardRef& shard,
                              int64_t interval_us) {
  return static_cast<int64_t>(model::stable_hash64(shard.canonical()) %
                              static_cast<uint64_t>(interval_us));
}

int64_t Worker::next_aligned_tick(const model::ShardRef& ref,
                                  int64_t interval_us, int64_t after_us) const {
  const int64_t phase = poll_phase_us(ref, interval_us);
  int64_t t = phase + (after_us - phase) / interval_us * interval_us;
  while (t <= after_us) t += interval_us;
  return t;
}

void Worker::maybe_stall() {
  if (!hooks_.stall_until_us) return;
  int64_t until = hooks_.stall_until_us->load();
  while (clock_.now_us() < until) {
    clock_.sleep_until(until);
    until = hooks_.stall_until_us->load();
  }
}

void Worker::emit(EventKind kind, const std::string& shard,
                  const std::string& detail, int64_t attempts) {
  if (!events_) return;
  events_->append(
      Event{clock_.now_us(), cfg_.worker_id, kind, shard, detail, attempts});
}

// ---- puller ----

void Worker::puller_main() {
  ClockThreadGuard guard(clock_);
  attach_latch_.count_down();
  while (!stopping_.load() && !killed_.load()) {
    maybe_stall();
    if (stopping_.load() || killed_.load()) break;
    try {
      pull_once();
    } catch (const kv::Error& e) {
      std::fprintf(stderr, "worker %s puller error: %s\n",
                   cfg_.worker_id.c_str(), e.what());
      break;
    }
    std::monostate nudge;
    // While the first heartbeat is still pending, retry on a short fuse
    // instead of idling out a whole poll interval with claims gated.
    const int64_t wait_us =
        lease_ready_.load() ? cfg_.polling_interval_ms * 1000 : 1000;
    const auto st = puller_wake_.recv_until(clock_.now_us() + wait_us, nudge);
    if (st == ChanStatus::Closed) break;
  }
  puller_done_.store(true);
  exited_mains_.fetch_add(1);
}

void Worker::pull_once() {
  if (!lease_ready_.load()) return;
  int want = cfg_.max_active_shards - owned_count_.load();
  if (want <= 0) return;

  kv::QuerySpec spec;
  spec.table = model::kActorTaskTable;
  spec.index = model::kActorTaskByWorkerIndex;
  spec.partition_value = std::string(model::kNoWorker);
  const std::vector<kv::Item> items = store_.query(spec);

  std::vector<model::ActorTaskRecord> candidates;
  candidates.reserve(items.size());
  for (const auto& item : items)
    candidates.push_back(model::task_from_item(item));
  std::sort(candidates.begin(), candidates.end(),
            [](const model::ActorTaskRecord& a, const model::ActorTaskRecord& b) {
              if (a.insertion_time != b.insertion_time)
                return a.insertion_time < b.insertion_time;
              return a.shard_ref.canonical() < b.shard_ref.canonical();
            });

  for (const auto& rec : candidates) {
    if (want <= 0 || stopping_.load() || killed_.load()) return;
    const std::string key = rec.shard_ref.canonical();
    {
      std::lock_guard<std::mutex> g(owned_mutex_);
      // Never re-claim a shard whose handle still lives here: the handle's
      // cached actors could go stale behind a second claim of the same name.
      if (owned_refs_.count(key) > 0) continue;
    }
    kv::Update claim;
    claim.table = model::kActorTaskTable;
    claim.key = task_key(rec.shard_ref);
    claim.set = {{"worker_id", cfg_.worker_id}, {"is_sealed", false}};
    claim.condition =
        kv::Condition::equals("worker_id", std::string(model::kNoWorker));
    const kv::WriteResult r = store_.write(claim);
    if (r.status == kv::WriteStatus::TransientFailure) return;  // next round
    if (!r.ok()) continue;  // another worker won the shard
    {
      std::lock_guard<std::mutex> g(owned_mutex_);
      owned_refs_.insert(key);
    }
    owned_count_.fetch_add(1);
    emit(EventKind::ShardClaimed, key);
    --want;
    if (!ctrl_.send(ControlMsg(ClaimedMsg{rec.shard_ref}))) return;
  }
}

// ---- heartbeat and peer reclaim ----

void Worker::heartbeat_main() {
  ClockThreadGuard guard(clock_);
  attach_latch_.count_down();
  for (;;) {
    if (killed_.load()) break;
    maybe_stall();
    if (killed_.load()) break;
    try {
      heartbeat_once();
    } catch (const kv::Error& e) {
      std::fprintf(stderr, "worker %s heartbeat error: %s\n",
                   cfg_.worker_id.c_str(), e.what());
      break;
    }
    std::monostate nudge;
    const auto st = heartbeat_wake_.recv_until(
        clock_.now_us() + cfg_.heartbeat_interval_ms * 1000, nudge);
    if (st == ChanStatus::Closed) break;
  }
  exited_mains_.fetch_add(1);
}

void Worker::heartbeat_once() {
  kv::Update beat;
  beat.table = model::kWorkerLeaseTable;
  beat.key = kv::Key{cfg_.worker_id, std::nullopt};
  beat.set = {{"heartbeat_time", clock_.now_ms()}};
  // A transient just waits for the next beat, but the puller stays gated
  // until one beat lands: a claim by a worker with no lease record would be
  // unrecoverable if the worker died.
  if (store_.write(beat).ok()) lease_ready_.store(true);

  const int64_t now = clock_.now_ms();
  for (const auto& item : store_.scan(model::kWorkerLeaseTable)) {
    if (killed_.load()) return;
    const model::WorkerLeaseRecord lease = model::lease_from_item(item);
    if (lease.worker_id == cfg_.worker_id) continue;
    if (now - lease.heartbeat_time <= cfg_.lease_duration_ms) continue;

    // Dead peer. Free its shards; clearing is_sealed matters because the
    // peer may have died mid-passivation, and a sealed free shard would be
    // unclaimable forever.
    kv::QuerySpec spec;
    spec.table = model::kActorTaskTable;
    spec.index = model::kActorTaskByWorkerIndex;
    spec.partition_value = lease.worker_id;
    bool residue = false;
    for (const auto& task_item : store_.query(spec)) {
      if (killed_.load()) return;
      const model::ActorTaskRecord rec = model::task_from_item(task_item);
      kv::Update free_task;
      free_task.table = model::kActorTaskTable;
      free_task.key = task_key(rec.shard_ref);
      free_task.set = {{"worker_id", std::string(model::kNoWorker)},
                       {"is_sealed", false}};
      free_task.condition =
          kv::Condition::equals("worker_id", lease.worker_id);
      const kv::WriteResult freed = store_.write(free_task);
      if (freed.status == kv::WriteStatus::TransientFailure) residue = true;
      if (freed.ok())
        emit(EventKind::ShardReclaimed, rec.shard_ref.canonical(),
             lease.worker_id);
    }
    // The lease record is the only route back to the peer's shards, so it
    // must outlive them: retire it only once the peer verifiably owns
    // nothing, and only if it has not come back meanwhile. After a transient
    // on a free above, the next beat retries.
    if (killed_.load()) return;
    if (residue || !store_.query(spec).empty()) continue;
    kv::Delete drop_lease;
    drop_lease.table = model::kWorkerLeaseTable;
    drop_lease.key = kv::Key{lease.worker_id, std::nullopt};
    drop_lease.condition =
        kv::Condition::equals("heartbeat_time", lease.heartbeat_time);
    store_.write(drop_lease);
  }
}

// ---- scheduler ----

void Worker::scheduler_main() {
  ClockThreadGuard guard(clock_);
  attach_latch_.count_down();
  for (;;) {
    if (killed_.load()) break;
    maybe_stall();
    if (killed_.load()) break;
    try {
      if (stopping_.load()) {
        release_idle_shards(std::numeric_limits<int>::max());
        if (shards_.empty() && puller_done_.load() && ctrl_.size() == 0) break;
      }
      int64_t deadline = next_wake_us();
      if (stopping_.load()) {
        // Bounded sleep while draining: re-check the puller's exit flag.
        deadline = std::min(deadline,
                            clock_.now_us() + cfg_.polling_interval_ms * 1000);
      }
      ControlMsg msg;
      const ChanStatus st = ctrl_.recv_until(deadline, msg);
      if (st == ChanStatus::Closed || killed_.load()) break;
      if (st == ChanStatus::Ok) {
        handle_control(msg);
        while (!killed_.load()) {
          auto more = ctrl_.try_recv();
          if (!more) break;
          handle_control(*more);
        }
      }
      if (killed_.load()) break;
      act_on_due_shards();
    } catch (const kv::Error& e) {
      std::fprintf(stderr, "worker %s scheduler error: %s\n",
                   cfg_.worker_id.c_str(), e.what());
      break;
    }
  }
  work_.close();  // drains the slots
  scheduler_done_.store(true);
  exited_mains_.fetch_add(1);
}

int64_t Worker::next_wake_us() const {
  int64_t deadline = Clock::kNoDeadline;
  for (const auto& entry : shards_) {
    const ShardHandle& h = *entry.second;
    switch (h.phase) {
      case Phase::Dispatched:
        break;
      case Phase::Parked:
        deadline = std::min(
            deadline,
            std::min(h.next_poll_us,
                     h.parked_since_us + cfg_.parking_threshold_ms * 1000));
        break;
      case Phase::Running:
        deadline = std::min(deadline, h.next_poll_us);
        break;
    }
  }
  return deadline;
}

void Worker::handle_control(ControlMsg& msg) {
  if (auto* claimed = std::get_if<ClaimedMsg>(&msg)) {
    const std::string key = claimed->ref.canonical();
    if (stopping_.load()) {
      // Claim raced the stop: hand the shard straight back.
      kv::Update free_task;
      free_task.table = model::kActorTaskTable;
      free_task.key = task_key(claimed->ref);
      free_task.set = {{"worker_id", std::string(model::kNoWorker)}};
      free_task.condition = owned_unsealed_condition(cfg_.worker_id);
      if (store_.write(free_task).ok()) emit(EventKind::ShardReleased, key);
      drop_handle(key);
      return;
    }
    if (shards_.count(key) > 0) return;
    auto h = std::make_unique<ShardHandle>();
    h->ref = claimed->ref;
    h->phase = Phase::Running;
    const int64_t now = clock_.now_us();
    h->last_activity_us = now;
    h->next_poll_us = now;  // poll right away
    shards_.emplace(key, std::move(h));
    return;
  }
  if (auto* report = std::get_if<SlotReportMsg>(&msg)) {
    ShardHandle& h = *report->handle;
    dispatched_count_.fetch_sub(1);
    const std::string key = h.ref.canonical();
    if (report->lost) {
      emit(EventKind::ShardLost, key);
      drop_handle(key);
      return;
    }
    const int64_t now = clock_.now_us();
    h.phase = Phase::Running;
    h.last_activity_us = now;
    h.pending.clear();
    h.next_poll_us =
        next_aligned_tick(h.ref, cfg_.polling_interval_ms * 1000, now);
    queue_wait_ewma_us_ = 0.7 * queue_wait_ewma_us_ +
                          0.3 * static_cast<double>(report->queue_wait_us);
    if (!stopping_.load() &&
        queue_wait_ewma_us_ > static_cast<double>(cfg_.release_queue_threshold_ms) * 1000.0 &&
        shards_.size() > 1) {
      release_idle_shards(1);
      queue_wait_ewma_us_ *= 0.5;
    }
    return;
  }
  if (auto* rel = std::get_if<ReleaseMsg>(&msg)) {
    if (rel->count > 0) release_idle_shards(rel->count);
    return;
  }
}

void Worker::act_on_due_shards() {
  if (stopping_.load() || killed_.load()) return;
  const int64_t now = clock_.now_us();
  std::vector<ShardHandle*> due_polls;
  std::vector<std::string> due_passivations;
  for (const auto& entry : shards_) {
    ShardHandle* h = entry.second.get();
    switch (h->phase) {
      case Phase::Dispatched:
        break;
      case Phase::Parked:
        if (now - h->parked_since_us >= cfg_.parking_threshold_ms * 1000)
          due_passivations.push_back(entry.first);
        else if (now >= h->next_poll_us)
          due_polls.push_back(h);
        break;
      case Phase::Running:
        if (now >= h->next_poll_us) due_polls.push_back(h);
        break;
    }
  }
  for (ShardHandle* h : due_polls) {
    if (killed_.load()) return;
    poll_shard(*h);
  }
  for (const std::string& key : due_passivations) {
    if (killed_.load() || stopping_.load()) return;
    const auto it = shards_.find(key);
    if (it == shards_.end() || it->second->phase != Phase::Parked) continue;
    passivate_parked(*it->second);
  }
}

void Worker::poll_shard(ShardHandle& h) {
  kv::QuerySpec spec;
  spec.table = model::kActorInboxTable;
  spec.partition_value = h.ref.canonical();
  const std::vector<kv::Item> items = store_.query(spec);
  const int64_t now = clock_.now_us();
  if (!items.empty()) {
    if (h.phase == Phase::Parked) emit(EventKind::ShardUnparked, h.ref.canonical());
    h.pending.clear();
    for (const auto& item : items)
      h.pending.push_back(model::envelope_from_item(item));
    h.phase = Phase::Dispatched;
    h.dispatched_at_us = now;
    h.last_activity_us = now;
    dispatched_count_.fetch_add(1);
    work_.send(&h);
    return;
  }
  if (h.phase == Phase::Running &&
      now - h.last_activity_us >= cfg_.park_after_idle_ms * 1000) {
    h.phase = Phase::Parked;
    h.parked_since_us = now;
    emit(EventKind::ShardParked, h.ref.canonical());
  }
  const int64_t interval = cfg_.polling_interval_ms * 1000 *
                           (h.phase == Phase::Parked ? kParkedPollFactor : 1);
  h.next_poll_us = next_aligned_tick(h.ref, interval, now);
}

void Worker::passivate_parked(ShardHandle& h) {
  const std::string key = h.ref.canonical();
  const PassivationOutcome outcome = passivate_shard(
      store_, cfg_.worker_id, h.ref, hooks_.passivation_probe,
      [this] { return killed_.load() || stopping_.load(); });
  switch (outcome) {
    case PassivationOutcome::Passive:
      emit(EventKind::ShardPassivated, key);
      drop_handle(key);
      break;
    case PassivationOutcome::Aborted: {
      emit(EventKind::PassivationAborted, key);
      const int64_t now = clock_.now_us();
      h.phase = Phase::Running;
      h.last_activity_us = now;
      h.next_poll_us = now;  // a message is waiting
      break;
    }
    case PassivationOutcome::Lost:
      emit(EventKind::ShardLost, key);
      drop_handle(key);
      break;
    case PassivationOutcome::Cancelled: {
      if (killed_.load()) break;
      // Graceful stop mid-passivation: give the shard back unsealed.
      kv::Update give_back;
      give_back.table = model::kActorTaskTable;
      give_back.key = task_key(h.ref);
      give_back.set = {{"worker_id", std::string(model::kNoWorker)},
                       {"is_sealed", false}};
      give_back.condition = kv::Condition::equals("worker_id", cfg_.worker_id);
      if (store_.write(give_back).ok()) emit(EventKind::ShardReleased, key);
      drop_handle(key);
      break;
    }
  }
}

void Worker::release_idle_shards(int count) {
  if (count <= 0) return;
  std::vector<std::string> keys;
  for (const auto& entry : shards_) {
    if (static_cast<int>(keys.size()) >= count) break;
    if (entry.second->phase != Phase::Dispatched) keys.push_back(entry.first);
  }
  for (const std::string& key : keys) {
    if (killed_.load()) return;
    const auto it = shards_.find(key);
    if (it == shards_.end()) continue;
    kv::Update free_task;
    free_task.table = model::kActorTaskTable;
    free_task.key = task_key(it->second->ref);
    free_task.set = {{"worker_id", std::string(model::kNoWorker)}};
    free_task.condition = owned_unsealed_condition(cfg_.worker_id);
    const kv::WriteResult r = store_.write(free_task);
    if (r.status == kv::WriteStatus::TransientFailure) continue;  // retry later
    if (r.ok())
      emit(EventKind::ShardReleased, key);
    else
      emit(EventKind::ShardLost, key);  // ownership was already gone
    drop_handle(key);
  }
}

void Worker::drop_handle(const std::string& key) {
  bool owned = false;
  {
    std::lock_guard<std::mutex> g(owned_mutex_);
    owned = owned_refs_.erase(key) > 0;
  }
  if (owned) owned_count_.fetch_sub(1);
  shards_.erase(key);
}

// ---- processing slots ----

void Worker::slot_main() {
  ClockThreadGuard guard(clock_);
  attach_latch_.count_down();
  for (;;) {
    const std::optional<ShardHandle*> h = work_.recv();
    if (!h) break;
    if (killed_.load()) break;
    try {
      drain_shard(**h);
    } catch (const kv::Error& e) {
      std::fprintf(stderr, "worker %s slot error: %s\n",
                   cfg_.worker_id.c_str(), e.what());
      break;
    }
  }
  exited_mains_.fetch_add(1);
}

void Worker::drain_shard(ShardHandle& h) {
  const int64_t queue_wait = clock_.now_us() - h.dispatched_at_us;
  bool lost = false;
  while (!h.pending.empty()) {
    if (halted()) return;
    maybe_stall();
    if (halted()) return;
    const model::MessageEnvelope env = h.pending.front();
    const int attempt = ++h.attempts[env.unique_id];
    const auto [result, reason] = process_one(h, env, attempt);
    if (result == ProcessResult::Committed) {
      h.attempts.erase(env.unique_id);
      h.pending.pop_front();
      continue;
    }
    if (result == ProcessResult::Halted) return;
    if (result == ProcessResult::Lost) {
      lost = true;
      break;
    }
    if (result == ProcessResult::Permanent ||
        attempt >= cfg_.max_message_retries) {
      const ProcessResult dl = dead_letter(env, reason, attempt);
      if (dl == ProcessResult::Halted) return;
      if (dl == ProcessResult::Lost) {
        lost = true;
        break;
      }
      h.attempts.erase(env.unique_id);
      h.pending.pop_front();
      continue;
    }
    emit(EventKind::MessageRetried, h.ref.canonical(), env.unique_id, attempt);
    // loop around and retry the same envelope
  }
  if (halted()) return;
  ctrl_.send(ControlMsg(SlotReportMsg{&h, lost, queue_wait}));
}

std::pair<Worker::ProcessResult, std::string> Worker::process_one(
    ShardHandle& h, const model::MessageEnvelope& env, int attempt) {
  const std::string receiver = env.receiver_id.canonical();
  auto it = h.actors.find(receiver);
  if (it == h.actors.end()) {
    const auto item =
        store_.get(model::kActorStateTable, kv::Key{receiver, std::nullopt});
    if (!item) return {ProcessResult::AppError, "missing_actor"};
    try {
      const model::ActorStateRecord rec = model::state_from_item(*item);
      it = h.actors
               .emplace(receiver, api::ActorInstance::from_record(registry_, rec))
               .first;
    } catch (const std::exception& e) {
      return {ProcessResult::Permanent,
              std::string("unloadable_actor: ") + e.what()};
    }
  }
  api::ActorInstance& inst = it->second;

  api::SideEffectSet effects;
  try {
    const api::Message msg = registry_.decode_message(env.type_tag, env.payload);
    effects = inst.process(store_, msg);
  } catch (const std::exception& e) {
    // Processing errors roll back before the throw; nothing was written.
    return {ProcessResult::AppError, std::string("handler: ") + e.what()};
  }

  // A stalled worker resumes exactly here, after deciding its effects and
  // before committing them; fencing is what voids the stale commit.
  maybe_stall();
  if (halted()) {
    inst.rollback();
    return {ProcessResult::Halted, ""};
  }

  const int64_t now_ms = clock_.now_ms();
  CommitDraft draft;
  draft.worker_id = cfg_.worker_id;
  draft.fence = !hooks_.disable_fencing;
  draft.consumed = env;
  draft.new_state = {env.receiver_id, inst.type_tag(), effects.new_actor_state};
  draft.now_ms = now_ms;
  for (const auto& out : effects.outgoing) {
    const auto [ts, uid] = stamp_sender(receiver);
    model::MessageEnvelope send;
    send.shard_ref = out.receiver.shard();
    send.timestamp = ts;
    send.unique_id = uid;
    send.sender_id = receiver;
    send.receiver_id = out.receiver;
    send.type_tag = out.type_tag;
    send.payload = out.payload;
    draft.sends.push_back(std::move(send));
  }
  for (const auto& ext : effects.external)
    draft.outbox.push_back(
        {ext.correlation_id, ext.type_tag, ext.payload, receiver, now_ms});
  for (const auto& sp : effects.spawns)
    draft.spawns.push_back({sp.id, sp.type_tag, sp.initial_state});
  draft.dirty_items = effects.dirty_items;
  draft.deleted_items = effects.deleted_items;

  const CommitPlan plan = build_commit_plan(draft);
  if (plan.actions.size() > store_.transaction_item_limit()) {
    inst.rollback();
    return {ProcessResult::Permanent, "oversized_commit"};
  }

  const kv::TxResult res = store_.transact_write(plan.actions);
  if (res.ok()) {
    inst.commit(std::move(effects.new_actor_state));
    emit(EventKind::MessageCommitted, h.ref.canonical(), env.unique_id,
         attempt);
    return {ProcessResult::Committed, ""};
  }
  inst.rollback();
  if (res.status == kv::WriteStatus::TransientFailure)
    return {ProcessResult::Transient, "storage_transient"};
  if (classify_condition_failure(plan, res.failed_index) ==
      CommitFailure::LostShard)
    return {ProcessResult::Lost, ""};
  return {ProcessResult::AppError, "spawn_conflict"};
}

Worker::ProcessResult Worker::dead_letter(const model::MessageEnvelope& env,
                                          const std::string& reason,
                                          int attempts) {
  for (;;) {
    if (halted()) return ProcessResult::Halted;
    const CommitPlan plan =
        build_dead_letter_plan(cfg_.worker_id, !hooks_.disable_fencing, env,
                               reason, attempts, clock_.now_ms());
    const kv::TxResult res = store_.transact_write(plan.actions);
    if (res.ok()) {
      emit(EventKind::MessageDeadLettered, env.shard_ref.canonical(),
           env.unique_id, attempts);
      return ProcessResult::Committed;
    }
    if (res.status == kv::WriteStatus::ConditionFailed)
      return ProcessResult::Lost;
    // transient: try again
  }
}

std::pair<int64_t, std::string> Worker::stamp_sender(
    const std::string& sender_id) {
  std::lock_guard<std::mutex> g(sender_mutex_);
  return {sender_clocks_[sender_id].next(clock_.now_ms()),
          model::random_unique_id(unique_rng_)};
}

}  // namespace troupe::runtime
