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

#include "troupe/runtime/events.hpp"

namespace troupe::runtime {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::WorkerStarted: return "worker_started";
    case EventKind::WorkerStopped: return "worker_stopped";
    case EventKind::WorkerKilled: return "worker_killed";
    case EventKind::ShardClaimed: return "shard_claimed";
    case EventKind::ShardLost: return "shard_lost";
    case EventKind::ShardReleased: return "shard_released";
    case EventKind::ShardParked: return "shard_parked";
    case EventKind::ShardUnparked: return "shard_unparked";
    case EventKind::ShardPassivated: return "shard_passivated";
    case EventKind::PassivationAborted: return "passivation_aborted";
    case EventKind::ShardReclaimed: return "shard_reclaimed";
    case EventKind::MessageCommitted: return "message_committed";
    case EventKind::MessageRetried: return "message_retried";
    case EventKind::MessageDeadLettered: return "message_dead_lettered";
  }
  return "unknown";
}

void EventLog::append(Event e) {
  std::lock_guard<std::mutex> g(mutex_);
  events_.push_back(std::move(e));
}

std::vector<Event> EventLog::snapshot() const {
  std::lock_guard<std::mutex> g(mutex_);
  return events_;
}

size_t EventLog::count(EventKind kind) const {
  std::lock_guard<std::mutex> g(mutex_);
  size_t n = 0;
  for (const auto& e : events_) {
    if (e.kind == kind) ++n;
  }
  return n;
}

std::vector<Event> EventLog::select(
    const std::function<bool(const Event&)>& pred) const {
  std::lock_guard<std::mutex> g(mutex_);
  std::vector<Event> out;
  for (const auto& e : events_) {
    if (pred(e)) out.push_back(e);
  }
  return out;
}

}  // namespace troupe::runtime
