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

#include "troupe/runtime/passivation.hpp"

#include "troupe/runtime/commit.hpp"

namespace troupe::runtime {

namespace {

bool is_cancelled(const std::function<bool()>& cancelled) {
  return cancelled && cancelled();
}

void probe_at(const PassivationProbe& probe, PassivationStep step) {
  if (probe) probe(step);
}

// Retries transients; the result is Committed or ConditionFailed.
kv::WriteResult write_retrying(kv::Store& store, const kv::WriteAction& action,
                               const std::function<bool()>& cancelled,
                               bool* gave_up) {
  for (;;) {
    kv::WriteResult r = store.write(action);
    if (r.status != kv::WriteStatus::TransientFailure) return r;
    if (is_cancelled(cancelled)) {
      *gave_up = true;
      return r;
    }
  }
}

}  // namespace

PassivationOutcome passivate_shard(kv::Store& store,
                                   const std::string& worker_id,
                                   const model::ShardRef& shard,
                                   const PassivationProbe& probe,
                                   const std::function<bool()>& cancelled) {
  bool gave_up = false;
  const kv::Key key = task_key(shard);

  auto unseal = [&]() -> PassivationOutcome {
    kv::Update u;
    u.table = model::kActorTaskTable;
    u.key = key;
    u.set = {{"is_sealed", false}};
    u.condition = kv::Condition::equals("worker_id", worker_id);
    kv::WriteResult r = write_retrying(store, u, cancelled, &gave_up);
    if (gave_up) return PassivationOutcome::Cancelled;
    if (!r.ok()) return PassivationOutcome::Lost;
    return PassivationOutcome::Aborted;
  };

  // Step 1: seal, recording the message counter the delete must still see.
  probe_at(probe, PassivationStep::BeforeSeal);
  kv::Update seal;
  seal.table = model::kActorTaskTable;
  seal.key = key;
  seal.set = {{"is_sealed", true}};
  seal.condition = owned_unsealed_condition(worker_id);
  kv::WriteResult sealed = write_retrying(store, seal, cancelled, &gave_up);
  if (gave_up) return PassivationOutcome::Cancelled;
  if (!sealed.ok()) return PassivationOutcome::Lost;
  const int64_t observed_count =
      std::get<int64_t>(sealed.item->attrs.at("msg_count"));

  // Step 2: strongly consistent inbox check.
  probe_at(probe, PassivationStep::BeforeCheck);
  kv::QuerySpec spec;
  spec.table = model::kActorInboxTable;
  spec.partition_value = shard.canonical();
  spec.limit = 1;
  if (!store.query(spec).empty()) return unseal();
  if (is_cancelled(cancelled)) return PassivationOutcome::Cancelled;

  // Step 3: delete, conditioned on nothing having arrived since the seal.
  probe_at(probe, PassivationStep::BeforeDelete);
  kv::Delete del;
  del.table = model::kActorTaskTable;
  del.key = key;
  del.condition = kv::Condition::all_of(
      {kv::Condition::equals("worker_id", worker_id),
       kv::Condition::equals("is_sealed", true),
       kv::Condition::equals("msg_count", observed_count)});
  kv::WriteResult removed = write_retrying(store, del, cancelled, &gave_up);
  if (gave_up) return PassivationOutcome::Cancelled;
  if (!removed.ok()) return unseal();
  probe_at(probe, PassivationStep::AfterDelete);
  return PassivationOutcome::Passive;
}

}  // namespace troupe::runtime
