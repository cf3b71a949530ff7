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

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace troupe::runtime {

enum class EventKind {
  WorkerStarted,
  WorkerStopped,
  WorkerKilled,
  ShardClaimed,
  ShardLost,
  ShardReleased,
  ShardParked,
  ShardUnparked,
  ShardPassivated,
  PassivationAborted,
  ShardReclaimed,
  MessageCommitted,
  MessageRetried,
  MessageDeadLettered,
};

const char* to_string(EventKind kind);

// One record per worker state transition or commit outcome.
struct Event {
  int64_t time_us = 0;
  std::string worker_id;
  EventKind kind = EventKind::WorkerStarted;
  std::string shard;   // canonical shard ref when the event concerns one
  std::string detail;  // envelope unique_id, reason, or peer worker id
  int64_t attempts = 0;
};

// Append-only, thread-safe. Workers write, the harness and tests read.
class EventLog {
public:
  void append(Event e);
  std::vector<Event> snapshot() const;
  size_t count(EventKind kind) const;
  // Matching events in append order.
  std::vector<Event> select(const std::function<bool(const Event&)>& pred) const;

private:
  mutable std::mutex mutex_;
  std::vector<Event> events_;
};

}  // namespace troupe::runtime
