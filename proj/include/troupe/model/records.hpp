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
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "troupe/kv/types.hpp"
#include "troupe/model/ids.hpp"

namespace troupe::model {

inline constexpr const char* kActorTaskTable = "ActorTask";
inline constexpr const char* kActorInboxTable = "ActorInbox";
inline constexpr const char* kActorStateTable = "ActorState";
inline constexpr const char* kOutboxTable = "Outbox";
inline constexpr const char* kWorkerLeaseTable = "WorkerLease";
inline constexpr const char* kDeadLetterTable = "DeadLetter";
inline constexpr const char* kActorTaskByWorkerIndex = "ActorTaskByWorker";

// Unclaimed marker for ActorTask.worker_id. A concrete sentinel (rather than
// attribute absence) keeps "claim if free" expressible as a plain equality
// condition.
inline constexpr const char* kNoWorker = "";

// External senders are not actors; their ids carry this prefix so sender ids
// stay unique per client without parsing as actor ids.
inline constexpr const char* kExternalSenderPrefix = "external:";

// Queryable attributes are stored beside the payload under this prefix so
// they can never collide with the fixed record attributes.
inline constexpr const char* kQueryableAttrPrefix = "q_";

struct MessageEnvelope {
  ShardRef shard_ref;  // recipient's shard
  int64_t timestamp = 0;
  std::string unique_id;
  std::string sender_id;  // canonical ActorId or "external:<client>"
  ActorId receiver_id;
  std::string type_tag;
  std::string payload;
};

struct ActorTaskRecord {
  ShardRef shard_ref;
  std::string worker_id = kNoWorker;
  int64_t insertion_time = 0;
  bool is_sealed = false;
  int64_t msg_count = 0;
};

struct ActorStateRecord {
  ActorId actor_id;
  std::string type_tag;
  std::string state;
};

struct CollectionItemRecord {
  std::string collection_id;  // canonical ActorId + "#" + field name
  std::string item_id;
  std::string payload;
  std::map<std::string, std::string> queryable_attributes;
};

struct OutboxRecord {
  std::string correlation_id;
  std::string type_tag;
  std::string content;
  std::string sender_id;
  int64_t timestamp = 0;
};

struct WorkerLeaseRecord {
  std::string worker_id;
  int64_t heartbeat_time = 0;
};

struct DeadLetterRecord {
  MessageEnvelope envelope;
  std::string reason;
  int64_t attempts = 0;
};

// A queryable collection declared by an actor type: its own table plus one
// index per queryable attribute.
struct CollectionDecl {
  std::string name;  // unique across the application, names the table
  std::vector<std::string> queryable_attributes;
};

std::string collection_table_name(const std::string& decl_name);
std::string collection_index_name(const std::string& attribute);
std::string collection_id(const ActorId& owner, const std::string& field);

// The fixed runtime tables plus one table per declared collection.
std::vector<kv::TableSchema> runtime_schemas(
    const std::vector<CollectionDecl>& collections);

// Inbox and dead-letter sort key: zero-padded decimal timestamp, '#',
// unique id. Lexicographic order equals (timestamp, unique_id) order.
std::string encode_sort_key(int64_t timestamp, const std::string& unique_id);
std::pair<int64_t, std::string> parse_sort_key(const std::string& text);

std::string random_unique_id(std::mt19937_64& rng);

kv::Item to_item(const MessageEnvelope& e);
MessageEnvelope envelope_from_item(const kv::Item& item);

kv::Item to_item(const ActorTaskRecord& r);
ActorTaskRecord task_from_item(const kv::Item& item);

kv::Item to_item(const ActorStateRecord& r);
ActorStateRecord state_from_item(const kv::Item& item);

kv::Item to_item(const CollectionItemRecord& r);
CollectionItemRecord collection_item_from_item(const kv::Item& item);

kv::Item to_item(const OutboxRecord& r);
OutboxRecord outbox_from_item(const kv::Item& item);

kv::Item to_item(const WorkerLeaseRecord& r);
WorkerLeaseRecord lease_from_item(const kv::Item& item);

kv::Item to_item(const DeadLetterRecord& r);
DeadLetterRecord dead_letter_from_item(const kv::Item& item);

}  // namespace troupe::model
