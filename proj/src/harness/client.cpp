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

#include "troupe/harness/client.hpp"

#include <utility>

#include "troupe/runtime/commit.hpp"

namespace troupe::harness {

Client::Client(Clock& clock, kv::Store& store, const std::string& name,
               uint64_t seed)
    : clock_(clock),
      store_(store),
      sender_id_(std::string(model::kExternalSenderPrefix) + name),
      rng_(seed ^ model::stable_hash64(name)) {}

std::string Client::send(const model::ActorId& to, const std::string& type_tag,
                         const std::string& payload) {
  model::MessageEnvelope e;
  {
    std::lock_guard<std::mutex> lk(m_);
    e.shard_ref = to.shard();
    e.timestamp = ts_.next(clock_.now_ms());
    e.unique_id = model::random_unique_id(rng_);
    e.sender_id = sender_id_;
    e.receiver_id = to;
    e.type_tag = type_tag;
    e.payload = payload;
  }
  // Same unique id on every retry: a ConditionFailed outcome means an earlier
  // attempt already landed, so either way the message is in exactly once.
  for (;;) {
    auto plan = runtime::build_inject_plan(e, clock_.now_ms());
    auto r = store_.transact_write(plan.actions);
    if (r.status != kv::WriteStatus::TransientFailure) return e.unique_id;
    clock_.sleep_for_us(1000);
  }
}

std::optional<model::OutboxRecord> Client::poll_response(
    const std::string& correlation_id) {
  auto item =
      store_.get(model::kOutboxTable, kv::Key{correlation_id, std::nullopt});
  if (!item) return std::nullopt;
  return model::outbox_from_item(*item);
}

std::optional<model::OutboxRecord> Client::await_response(
    const std::string& correlation_id, int64_t timeout_us, int64_t poll_us) {
  int64_t deadline = clock_.now_us() + timeout_us;
  for (;;) {
    auto rec = poll_response(correlation_id);
    if (rec) return rec;
    if (clock_.now_us() >= deadline) return std::nullopt;
    clock_.sleep_for_us(poll_us);
  }
}

}  // namespace troupe::harness
