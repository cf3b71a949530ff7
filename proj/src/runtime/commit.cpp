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

#include "troupe/runtime/commit.hpp"

#include <map>
#include <utility>

namespace troupe::runtime {

namespace {

void add(CommitPlan& plan, kv::WriteAction action, ActionKind kind) {
  plan.actions.push_back(std::move(action));
  plan.kinds.push_back(kind);
}

// One inbox put per envelope plus one task upsert per distinct recipient
// shard. When the committing worker sends to its own shard, its upsert
// doubles as the fencing action (the transaction may not name the same key
// twice), so the caller learns whether a separate fence is still needed.
void append_send_actions(CommitPlan& plan,
                         const std::vector<model::MessageEnvelope>& sends,
                         int64_t now_ms, const std::string& fence_worker_id,
                         const model::ShardRef* self_shard,
                         bool* fence_merged) {
  std::map<model::ShardRef, int64_t> per_shard;
  for (const auto& e : sends) {
    add(plan,
        kv::Put{model::kActorInboxTable, model::to_item(e),
                kv::Condition::not_exists()},
        ActionKind::InboxPut);
    per_shard[e.shard_ref] += 1;
  }
  for (const auto& [shard, count] : per_shard) {
    kv::Update up = task_upsert(shard, now_ms, count);
    ActionKind kind = ActionKind::TaskUpsert;
    if (self_shard && shard == *self_shard) {
      up.condition = owned_unsealed_condition(fence_worker_id);
      kind = ActionKind::Fence;
      if (fence_merged) *fence_merged = true;
    }
    add(plan, std::move(up), kind);
  }
}

}  // namespace

kv::Condition owned_unsealed_condition(const std::string& worker_id) {
  return kv::Condition::all_of(
      {kv::Condition::equals("worker_id", worker_id),
       kv::Condition::equals("is_sealed", false)});
}

kv::Key task_key(const model::ShardRef& shard) {
  return kv::Key{shard.canonical(), std::nullopt};
}

kv::Key envelope_key(const model::MessageEnvelope& e) {
  return kv::Key{e.shard_ref.canonical(),
                 std::optional<kv::AttributeValue>(
                     model::encode_sort_key(e.timestamp, e.unique_id))};
}

kv::Update task_upsert(const model::ShardRef& shard, int64_t now_ms,
                       int64_t new_messages) {
  kv::Update up;
  up.table = model::kActorTaskTable;
  up.key = task_key(shard);
  up.set_if_absent = {{"worker_id", std::string(model::kNoWorker)},
                      {"is_sealed", false},
                      {"insertion_time", now_ms}};
  up.increment = {{"msg_count", new_messages}};
  return up;
}

CommitPlan build_commit_plan(const CommitDraft& draft) {
  CommitPlan plan;
  const model::ShardRef& self_shard = draft.consumed.shard_ref;

  bool self_send = false;
  for (const auto& e : draft.sends) {
    if (e.shard_ref == self_shard) self_send = true;
  }
  if (draft.fence && !self_send) {
    add(plan,
        kv::ConditionCheck{model::kActorTaskTable, task_key(self_shard),
                           owned_unsealed_condition(draft.worker_id)},
        ActionKind::Fence);
  }

  kv::Delete env_del{model::kActorInboxTable, envelope_key(draft.consumed), {}};
  if (draft.fence) env_del.condition = kv::Condition::exists();
  add(plan, std::move(env_del), ActionKind::EnvelopeDelete);

  add(plan, kv::Put{model::kActorStateTable, model::to_item(draft.new_state), {}},
      ActionKind::StatePut);

  for (const auto& s : draft.spawns) {
    add(plan,
        kv::Put{model::kActorStateTable, model::to_item(s),
                kv::Condition::not_exists()},
        ActionKind::SpawnPut);
  }

  for (const auto& d : draft.dirty_items) {
    model::CollectionItemRecord r{d.collection_id, d.item_id, d.payload,
                                  d.queryable_attributes};
    add(plan, kv::Put{d.table, model::to_item(r), {}}, ActionKind::ItemPut);
  }
  for (const auto& d : draft.deleted_items) {
    add(plan,
        kv::Delete{d.table,
                   kv::Key{d.collection_id,
                           std::optional<kv::AttributeValue>(d.item_id)},
                   {}},
        ActionKind::ItemDelete);
  }

  append_send_actions(plan, draft.sends, draft.now_ms,
                      draft.fence ? draft.worker_id : std::string(),
                      draft.fence ? &self_shard : nullptr, nullptr);

  // Last write per correlation id wins; the store rejects duplicate keys
  // within one transaction.
  std::map<std::string, const model::OutboxRecord*> last;
  for (const auto& o : draft.outbox) last[o.correlation_id] = &o;
  for (const auto& [cid, o] : last) {
    add(plan, kv::Put{model::kOutboxTable, model::to_item(*o), {}},
        ActionKind::OutboxPut);
  }
  return plan;
}

CommitPlan build_dead_letter_plan(const std::string& worker_id, bool fence,
                                  const model::MessageEnvelope& consumed,
                                  const std::string& reason, int64_t attempts,
                                  int64_t now_ms) {
  (void)now_ms;
  CommitPlan plan;
  if (fence) {
    add(plan,
        kv::ConditionCheck{model::kActorTaskTable,
                           task_key(consumed.shard_ref),
                           owned_unsealed_condition(worker_id)},
        ActionKind::Fence);
  }
  kv::Delete env_del{model::kActorInboxTable, envelope_key(consumed), {}};
  if (fence) env_del.condition = kv::Condition::exists();
  add(plan, std::move(env_del), ActionKind::EnvelopeDelete);

  model::DeadLetterRecord dl{consumed, reason, attempts};
  add(plan, kv::Put{model::kDeadLetterTable, model::to_item(dl), {}},
      ActionKind::DeadLetterPut);
  return plan;
}

CommitPlan build_inject_plan(const model::MessageEnvelope& envelope,
                             int64_t now_ms) {
  CommitPlan plan;
  append_send_actions(plan, {envelope}, now_ms, std::string(), nullptr,
                      nullptr);
  return plan;
}

CommitFailure classify_condition_failure(const CommitPlan& plan,
                                         int failed_index) {
  if (failed_index < 0 ||
      static_cast<size_t>(failed_index) >= plan.kinds.size()) {
    return CommitFailure::LostShard;
  }
  switch (plan.kinds[failed_index]) {
    case ActionKind::SpawnPut:
      return CommitFailure::ApplicationConflict;
    default:
      // Fence, envelope consumption, and inbox uniqueness guards all mean
      // this worker's view of the shard is stale.
      return CommitFailure::LostShard;
  }
}

}  // namespace troupe::runtime
