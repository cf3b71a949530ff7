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
// Translates one processed message into a single storage transaction: consume
// the envelope, persist state and items, create spawned actors, append to
// recipient inboxes, upsert recipient task records, write outbox replies, all
// guarded by a fencing condition on the committing worker's shard ownership.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "troupe/api/api.hpp"
#include "troupe/kv/types.hpp"
#include "troupe/model/records.hpp"

namespace troupe::runtime {

// Parallel classification of each transaction action so a ConditionFailed's
// failed_index maps back to a cause.
enum class ActionKind {
  Fence,
  EnvelopeDelete,
  StatePut,
  SpawnPut,
  ItemPut,
  ItemDelete,
  InboxPut,
  TaskUpsert,
  OutboxPut,
  DeadLetterPut,
};

struct CommitPlan {
  std::vector<kv::WriteAction> actions;
  std::vector<ActionKind> kinds;
};

// Everything the commit of one processed message writes. Sends must already
// be stamped (timestamp, unique_id) by the caller.
struct CommitDraft {
  std::string worker_id;
  bool fence = true;  // test hook: false drops the ownership guards
  model::MessageEnvelope consumed;
  model::ActorStateRecord new_state;
  std::vector<model::MessageEnvelope> sends;
  std::vector<model::OutboxRecord> outbox;
  std::vector<model::ActorStateRecord> spawns;
  std::vector<api::DirtyItem> dirty_items;
  std::vector<api::DeletedItem> deleted_items;
  int64_t now_ms = 0;
};

// Ownership guard: worker_id equals self and the shard is not sealed.
kv::Condition owned_unsealed_condition(const std::string& worker_id);

kv::Key task_key(const model::ShardRef& shard);
kv::Key envelope_key(const model::MessageEnvelope& e);

// Recipient-side task record upsert: create {worker: free, unsealed} when
// absent, always bump msg_count by the number of new envelopes.
kv::Update task_upsert(const model::ShardRef& shard, int64_t now_ms,
                       int64_t new_messages);

CommitPlan build_commit_plan(const CommitDraft& draft);

// Envelope removal plus a dead-letter record, fenced like a commit.
CommitPlan build_dead_letter_plan(const std::string& worker_id, bool fence,
                                  const model::MessageEnvelope& consumed,
                                  const std::string& reason, int64_t attempts,
                                  int64_t now_ms);

// Client-side injection: the same inbox put + task upsert a worker performs
// for a recipient shard. Idempotent under retry with an unchanged unique_id.
CommitPlan build_inject_plan(const model::MessageEnvelope& envelope,
                             int64_t now_ms);

enum class CommitFailure {
  LostShard,            // fencing or consumption guard: drop the shard
  ApplicationConflict,  // spawn target exists: application error, retryable
};

CommitFailure classify_condition_failure(const CommitPlan& plan,
                                         int failed_index);

}  // namespace troupe::runtime
