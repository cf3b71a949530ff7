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

#include "troupe/model/records.hpp"

#include <algorithm>
#include <stdexcept>

namespace troupe::model {

namespace {

// Fits any 64-bit millisecond-based ordering key built this century.
constexpr size_t kTimestampDigits = 19;

const std::string& text_attr(const kv::Item& item, const std::string& name) {
  auto it = item.attrs.find(name);
  if (it == item.attrs.end()) {
    throw std::invalid_argument("record missing attribute: " + name);
  }
  return std::get<std::string>(it->second);
}

const std::string& bytes_attr(const kv::Item& item, const std::string& name) {
  auto it = item.attrs.find(name);
  if (it == item.attrs.end()) {
    throw std::invalid_argument("record missing attribute: " + name);
  }
  return std::get<kv::Bytes>(it->second).data;
}

int64_t int_attr(const kv::Item& item, const std::string& name) {
  auto it = item.attrs.find(name);
  if (it == item.attrs.end()) {
    throw std::invalid_argument("record missing attribute: " + name);
  }
  return std::get<int64_t>(it->second);
}

bool bool_attr(const kv::Item& item, const std::string& name) {
  auto it = item.attrs.find(name);
  if (it == item.attrs.end()) {
    throw std::invalid_argument("record missing attribute: " + name);
  }
  return std::get<bool>(it->second);
}

}  // namespace

std::string collection_table_name(const std::string& decl_name) {
  return "Collection_" + decl_name;
}

std::string collection_index_name(const std::string& attribute) {
  return "by_" + attribute;
}

std::string collection_id(const ActorId& owner, const std::string& field) {
  return owner.canonical() + "#" + field;
}

std::vector<kv::TableSchema> runtime_schemas(
    const std::vector<CollectionDecl>& collections) {
  std::vector<kv::TableSchema> out;
  out.push_back({kActorTaskTable, "shard_ref", std::nullopt,
                 {{kActorTaskByWorkerIndex, "worker_id"}}});
  out.push_back({kActorInboxTable, "shard_ref", std::optional<std::string>("sk"), {}});
  out.push_back({kActorStateTable, "actor_id", std::nullopt, {}});
  out.push_back({kOutboxTable, "correlation_id", std::nullopt, {}});
  out.push_back({kWorkerLeaseTable, "worker_id", std::nullopt, {}});
  out.push_back({kDeadLetterTable, "shard_ref", std::optional<std::string>("sk"), {}});
  for (const auto& c : collections) {
    kv::TableSchema schema;
    schema.name = collection_table_name(c.name);
    schema.partition_key = "collection_id";
    schema.sort_key = "item_id";
    for (const auto& attr : c.queryable_attributes) {
      schema.indexes.push_back(
          {collection_index_name(attr), kQueryableAttrPrefix + attr});
    }
    out.push_back(std::move(schema));
  }
  return out;
}

std::string encode_sort_key(int64_t timestamp, const std::string& unique_id) {
  if (timestamp < 0) {
    throw std::invalid_argument("negative timestamp");
  }
  std::string digits = std::to_string(timestamp);
  if (digits.size() > kTimestampDigits) {
    throw std::invalid_argument("timestamp out of range: " + digits);
  }
  std::string out(kTimestampDigits - digits.size(), '0');
  out += digits;
  out += '#';
  out += unique_id;
  return out;
}

std::pair<int64_t, std::string> parse_sort_key(const std::string& text) {
  if (text.size() < kTimestampDigits + 1 || text[kTimestampDigits] != '#') {
    throw std::invalid_argument("malformed sort key: " + text);
  }
  int64_t ts = 0;
  for (size_t i = 0; i < kTimestampDigits; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') {
      throw std::invalid_argument("malformed sort key: " + text);
    }
    ts = ts * 10 + (c - '0');
  }
  return {ts, text.substr(kTimestampDigits + 1)};
}

std::string random_unique_id(std::mt19937_64& rng) {
  static const char* hex = "0123456789abcdef";
  uint64_t a = rng();
  uint64_t b = rng();
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    out[i] = hex[(a >> (60 - 4 * i)) & 0xf];
    out[16 + i] = hex[(b >> (60 - 4 * i)) & 0xf];
  }
  return out;
}

kv::Item to_item(const MessageEnvelope& e) {
  kv::Item item;
  item.attrs["shard_ref"] = e.shard_ref.canonical();
  item.attrs["sk"] = encode_sort_key(e.timestamp, e.unique_id);
  item.attrs["sender_id"] = e.sender_id;
  item.attrs["receiver_id"] = e.receiver_id.canonical();
  item.attrs["type_tag"] = e.type_tag;
  item.attrs["payload"] = kv::Bytes{e.payload};
  return item;
}

MessageEnvelope envelope_from_item(const kv::Item& item) {
  MessageEnvelope e;
  e.shard_ref = ShardRef::parse(text_attr(item, "shard_ref"));
  auto [ts, uid] = parse_sort_key(text_attr(item, "sk"));
  e.timestamp = ts;
  e.unique_id = uid;
  e.sender_id = text_attr(item, "sender_id");
  e.receiver_id = ActorId::parse(text_attr(item, "receiver_id"));
  e.type_tag = text_attr(item, "type_tag");
  e.payload = bytes_attr(item, "payload");
  return e;
}

kv::Item to_item(const ActorTaskRecord& r) {
  kv::Item item;
  item.attrs["shard_ref"] = r.shard_ref.canonical();
  item.attrs["worker_id"] = r.worker_id;
  item.attrs["insertion_time"] = r.insertion_time;
  item.attrs["is_sealed"] = r.is_sealed;
  item.attrs["msg_count"] = r.msg_count;
  return item;
}

ActorTaskRecord task_from_item(const kv::Item& item) {
  ActorTaskRecord r;
  r.shard_ref = ShardRef::parse(text_attr(item, "shard_ref"));
  r.worker_id = text_attr(item, "worker_id");
  r.insertion_time = int_attr(item, "insertion_time");
  r.is_sealed = bool_attr(item, "is_sealed");
  r.msg_count = int_attr(item, "msg_count");
  return r;
}

kv::Item to_item(const ActorStateRecord& r) {
  kv::Item item;
  item.attrs["actor_id"] = r.actor_id.canonical();
  item.attrs["type_tag"] = r.type_tag;
  item.attrs["current_state"] = kv::Bytes{r.state};
  return item;
}

ActorStateRecord state_from_item(const kv::Item& item) {
  ActorStateRecord r;
  r.actor_id = ActorId::parse(text_attr(item, "actor_id"));
  r.type_tag = text_attr(item, "type_tag");
  r.state = bytes_attr(item, "current_state");
  return r;
}

kv::Item to_item(const CollectionItemRecord& r) {
  kv::Item item;
  item.attrs["collection_id"] = r.collection_id;
  item.attrs["item_id"] = r.item_id;
  item.attrs["payload"] = kv::Bytes{r.payload};
  for (const auto& [name, value] : r.queryable_attributes) {
    item.attrs[kQueryableAttrPrefix + name] = value;
  }
  return item;
}

CollectionItemRecord collection_item_from_item(const kv::Item& item) {
  CollectionItemRecord r;
  r.collection_id = text_attr(item, "collection_id");
  r.item_id = text_attr(item, "item_id");
  r.payload = bytes_attr(item, "payload");
  const std::string prefix = kQueryableAttrPrefix;
  for (const auto& [name, value] : item.attrs) {
    if (name.rfind(prefix, 0) == 0) {
      r.queryable_attributes[name.substr(prefix.size())] =
          std::get<std::string>(value);
    }
  }
  return r;
}

kv::Item to_item(const OutboxRecord& r) {
  kv::Item item;
  item.attrs["correlation_id"] = r.correlation_id;
  item.attrs["type_tag"] = r.type_tag;
  item.attrs["content"] = kv::Bytes{r.content};
  item.attrs["sender_id"] = r.sender_id;
  item.attrs["timestamp"] = r.timestamp;
  return item;
}

OutboxRecord outbox_from_item(const kv::Item& item) {
  OutboxRecord r;
  r.correlation_id = text_attr(item, "correlation_id");
  r.type_tag = text_attr(item, "type_tag");
  r.content = bytes_attr(item, "content");
  r.sender_id = text_attr(item, "sender_id");
  r.timestamp = int_attr(item, "timestamp");
  return r;
}

kv::Item to_item(const WorkerLeaseRecord& r) {
  kv::Item item;
  item.attrs["worker_id"] = r.worker_id;
  item.attrs["heartbeat_time"] = r.heartbeat_time;
  return item;
}

WorkerLeaseRecord lease_from_item(const kv::Item& item) {
  WorkerLeaseRecord r;
  r.worker_id = text_attr(item, "worker_id");
  r.heartbeat_time = int_attr(item, "heartbeat_time");
  return r;
}

kv::Item to_item(const DeadLetterRecord& r) {
  kv::Item item = to_item(r.envelope);
  item.attrs["reason"] = r.reason;
  item.attrs["attempts"] = r.attempts;
  return item;
}

DeadLetterRecord dead_letter_from_item(const kv::Item& item) {
  DeadLetterRecord r;
  r.envelope = envelope_from_item(item);
  r.reason = text_attr(item, "reason");
  r.attempts = int_attr(item, "attempts");
  return r;
}

}  // namespace troupe::model
