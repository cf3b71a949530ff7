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
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include "troupe/clock.hpp"
#include "troupe/kv/store.hpp"
#include "troupe/model/ids.hpp"
#include "troupe/model/records.hpp"

namespace troupe::harness {

// External application client: injects messages with the same atomic
// inbox-plus-task write a worker commit uses, and reads replies from the
// outbox. Retrying a send keeps its unique id, so duplicates cannot enter.
class Client {
public:
  Client(Clock& clock, kv::Store& store, const std::string& name,
         uint64_t seed);

  // Delivers one message; blocks through transient storage failures.
  // Returns the envelope unique id.
  std::string send(const model::ActorId& to, const std::string& type_tag,
                   const std::string& payload);

  // Polls the outbox until the correlation shows up or the timeout passes.
  std::optional<model::OutboxRecord> await_response(
      const std::string& correlation_id, int64_t timeout_us,
      int64_t poll_us = 5000);

  // Non-blocking outbox read.
  std::optional<model::OutboxRecord> poll_response(
      const std::string& correlation_id);

  const std::string& sender_id() const { return sender_id_; }

private:
  Clock& clock_;
  kv::Store& store_;
  std::string sender_id_;
  std::mutex m_;
  model::SenderTimestamps ts_;
  std::mt19937_64 rng_;
};

}  // namespace troupe::harness
