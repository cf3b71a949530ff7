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

// The developer-facing programming model: actors receive typed messages and
// act through injected feature handles (message sender, spawner, queryable
// collections). Every effect lands in a buffered SideEffectSet; nothing
// touches storage until the runtime commits the whole set atomically.

#pragma once

#include <algorithm>
#include <any>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <typeindex>
#include <utility>
#include <vector>

#include <json.hpp>

#include "troupe/kv/store.hpp"
#include "troupe/model/ids.hpp"
#include "troupe/model/records.hpp"

namespace troupe::api {

using Json = nlohmann::json;

enum class ApiErrorKind {
  UnregisteredMessageType,
  UnregisteredActorType,
  UnregisteredItemType,
  DuplicateRegistration,
  ItemNotFound,
  UnknownQueryableAttribute,
  DuplicateSpawn,
  UnboundFeature,
  MalformedPayload,
};

class ApiError : public std::runtime_error {
public:
  ApiError(ApiErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ApiErrorKind kind() const { return kind_; }

private:
  ApiErrorKind kind_;
};

// A decoded message: the registered tag plus the typed value.
class Message {
public:
  Message() = default;
  Message(std::string type_tag, std::any value)
      : type_tag_(std::move(type_tag)), value_(std::move(value)) {}

  const std::string& type_tag() const { return type_tag_; }

  template <typename T>
  const T& as() const {
    const T* p = std::any_cast<T>(&value_);
    if (!p) {
      throw ApiError(ApiErrorKind::MalformedPayload,
                     "message " + type_tag_ + " is not the requested type");
    }
    return *p;
  }

private:
  std::string type_tag_;
  std::any value_;
};

struct OutgoingMessage {
  model::ActorId receiver;
  std::string type_tag;
  std::string payload;
  bool operator==(const OutgoingMessage&) const = default;
};

struct ExternalMessage {
  std::string correlation_id;
  std::string type_tag;
  std::string payload;
  bool operator==(const ExternalMessage&) const = default;
};

struct SpawnEffect {
  model::ActorId id;
  std::string type_tag;
  std::string initial_state;
  bool operator==(const SpawnEffect&) const = default;
};

struct DirtyItem {
  std::string table;
  std::string collection_id;
  std::string item_id;
  std::string payload;
  std::map<std::string, std::string> queryable_attributes;
  bool operator==(const DirtyItem&) const = default;
};

struct DeletedItem {
  std::string table;
  std::string collection_id;
  std::string item_id;
  bool operator==(const DeletedItem&) const = default;
};

// Everything one message-processing call wants to change, buffered. Discarded
// whole on processing error; applied atomically by the runtime on commit.
struct SideEffectSet {
  std::string new_actor_state;
  std::vector<OutgoingMessage> outgoing;
  std::vector<ExternalMessage> external;
  std::vector<SpawnEffect> spawns;
  std::vector<DirtyItem> dirty_items;
  std::vector<DeletedItem> deleted_items;
  bool operator==(const SideEffectSet&) const = default;
};

class ActorBehavior;
class ProcessingContext;
class Registry;

namespace detail {

// Collection fields report their buffered changes into the effect set at the
// end of a processing call.
class CollectionField {
public:
  virtual ~CollectionField() = default;
  virtual void flush(SideEffectSet& out) = 0;
};

}  // namespace detail

// Application actors subclass this, declare feature fields, and register the
// type with Registry::actor. State fields must round-trip through the type's
// to_json/from_json.
class ActorBehavior {
public:
  virtual ~ActorBehavior() = default;
  virtual void receive(const Message& msg) = 0;

  const model::ActorId& self() const { return self_; }
  void bind_self(model::ActorId id) { self_ = std::move(id); }

private:
  model::ActorId self_;
};

// Feature handle: queue messages to other actors or to the outbox. Valid only
// during the processing call that bound it.
class MessageSender {
public:
  MessageSender() = default;
  explicit MessageSender(ProcessingContext* ctx) : ctx_(ctx) {}

  template <typename T>
  void tell(const model::ActorId& receiver, const T& msg);

  template <typename T>
  void tell_external(const std::string& correlation_id, const T& msg);

private:
  ProcessingContext* ctx_ = nullptr;
};

// Feature handle: create new actors. The identifier is usable immediately;
// the actor record itself is created by the commit (condition: not exists).
class ActorSpawner {
public:
  ActorSpawner() = default;
  explicit ActorSpawner(ProcessingContext* ctx) : ctx_(ctx) {}

  template <typename T>
  model::ActorId spawn(const T& prototype, const std::string& partition_name,
                       const std::string& instance_id);

private:
  ProcessingContext* ctx_ = nullptr;
};

// Type registry: message, item, and actor types keyed by stable text tags.
// Configure fully before starting any runtime component; reads are lock-free.
class Registry {
public:
  template <typename T>
  void register_message(const std::string& tag) {
    ensure_new_message(tag, std::type_index(typeid(T)));
    message_tags_[std::type_index(typeid(T))] = tag;
    message_decoders_[tag] = [tag](const std::string& payload) -> std::any {
      return std::any(parse_payload(tag, payload).get<T>());
    };
  }

  template <typename T>
  void register_item(
      const std::string& tag, std::vector<std::string> queryable_attributes,
      std::function<std::map<std::string, std::string>(const T&)> exporter =
          nullptr) {
    ensure_new_item(tag, std::type_index(typeid(T)));
    ItemEntry entry;
    entry.tag = tag;
    entry.queryables = std::move(queryable_attributes);
    if (!exporter) {
      exporter = [](const T&) { return std::map<std::string, std::string>{}; };
    }
    entry.exporter = std::move(exporter);
    items_[std::type_index(typeid(T))] = std::move(entry);
  }

  template <typename A>
  class ActorRegistrar;

  template <typename A>
  ActorRegistrar<A> register_actor(const std::string& tag);

  template <typename T>
  const std::string& message_tag() const {
    auto it = message_tags_.find(std::type_index(typeid(T)));
    if (it == message_tags_.end()) {
      throw ApiError(ApiErrorKind::UnregisteredMessageType,
                     std::string("unregistered message type: ") + typeid(T).name());
    }
    return it->second;
  }

  template <typename T>
  const std::string& actor_tag() const {
    auto it = actor_tags_.find(std::type_index(typeid(T)));
    if (it == actor_tags_.end()) {
      throw ApiError(ApiErrorKind::UnregisteredActorType,
                     std::string("unregistered actor type: ") + typeid(T).name());
    }
    return it->second;
  }

  template <typename T>
  static std::string encode(const T& value) {
    return Json(value).dump();
  }

  static Json parse_payload(const std::string& tag, const std::string& payload);

  Message decode_message(const std::string& tag, const std::string& payload) const;
  bool has_message(const std::string& tag) const {
    return message_decoders_.count(tag) > 0;
  }

  struct ItemEntry {
    std::string tag;
    std::vector<std::string> queryables;
    std::any exporter;
  };

  template <typename T>
  const ItemEntry& item_entry() const {
    auto it = items_.find(std::type_index(typeid(T)));
    if (it == items_.end()) {
      throw ApiError(ApiErrorKind::UnregisteredItemType,
                     std::string("unregistered item type: ") + typeid(T).name());
    }
    return it->second;
  }

  struct ActorTypeInfo {
    std::string tag;
    std::function<std::unique_ptr<ActorBehavior>()> create;
    std::function<std::string(const ActorBehavior&)> serialize_state;
    std::function<void(ActorBehavior&, const std::string&)> load_state;
    std::vector<std::function<void(ActorBehavior&, ProcessingContext&)>> binders;
    std::vector<model::CollectionDecl> collections;
  };

  const ActorTypeInfo& actor_info(const std::string& tag) const;

  void set_shard_policy(const std::string& partition_name, uint32_t bucket_count);
  void set_default_bucket_count(uint32_t bucket_count) {
    default_bucket_count_ = bucket_count;
  }
  model::ShardPolicy shard_policy(const std::string& partition_name) const;

  // Every collection declared by any registered actor type; drives schemas.
  std::vector<model::CollectionDecl> collection_decls() const;

private:
  void ensure_new_message(const std::string& tag, std::type_index type);
  void ensure_new_item(const std::string& tag, std::type_index type);
  void ensure_new_actor(const std::string& tag, std::type_index type);
  void claim_collection_name(const std::string& name);

  std::map<std::string, std::function<std::any(const std::string&)>> message_decoders_;
  std::map<std::type_index, std::string> message_tags_;
  std::map<std::type_index, ItemEntry> items_;
  std::set<std::string> item_tags_;
  std::map<std::string, ActorTypeInfo> actors_;
  std::map<std::type_index, std::string> actor_tags_;
  std::set<std::string> collection_names_;
  std::map<std::string, uint32_t> partition_buckets_;
  uint32_t default_bucket_count_ = 1;
};

// One actor's queryable collection, scoped to the owning actor instance.
// Values read through get() are cached and mutable in place; changed or put
// entries persist at commit, and find() overlays local changes onto the
// committed index.
template <typename T>
class Collection final : public detail::CollectionField {
public:
  Collection() = default;

  T& get(const std::string& item_id);
  bool contains(const std::string& item_id);
  std::vector<std::pair<std::string, T>> find(const std::string& attribute,
                                              const std::string& value);
  void put(const std::string& item_id, T value);
  void remove(const std::string& item_id);

  void bind(ProcessingContext& ctx, const std::string& field_name);
  void flush(SideEffectSet& out) override;

private:
  struct Entry {
    T value;
    std::string pristine;  // serialization at load; differing bytes = dirty
    bool forced = false;   // put() persists even when bytes match
  };

  void ensure_bound() const {
    if (!ctx_) {
      throw ApiError(ApiErrorKind::UnboundFeature,
                     "collection handle used outside a processing call");
    }
  }

  ProcessingContext* ctx_ = nullptr;
  std::string table_;
  std::string collection_id_;
  const Registry::ItemEntry* item_entry_ = nullptr;
  std::map<std::string, Entry> cache_;
  std::set<std::string> deleted_;
};

// Per-message execution context. Routes every feature call into one
// SideEffectSet and serves strongly consistent collection reads.
class ProcessingContext {
public:
  ProcessingContext(const Registry& registry, kv::Store& store,
                    model::ActorId self);

  const Registry& registry() const { return registry_; }
  kv::Store& store() { return store_; }
  const model::ActorId& self() const { return self_; }

  void add_outgoing(const model::ActorId& receiver, std::string type_tag,
                    std::string payload);
  void add_external(std::string correlation_id, std::string type_tag,
                    std::string payload);
  model::ActorId do_spawn(const std::string& type_tag, std::string initial_state,
                          const std::string& partition_name,
                          const std::string& instance_id);

  std::optional<std::string> read_item(const std::string& table,
                                       const std::string& collection_id,
                                       const std::string& item_id);
  // (item_id, payload) of committed items whose indexed attribute equals value.
  std::vector<std::pair<std::string, std::string>> find_committed(
      const std::string& table, const std::string& collection_id,
      const std::string& attribute, const std::string& value);

  void track(detail::CollectionField* field);

  // Serializes the actor state, flushes tracked collections, and hands over
  // the completed effect set.
  SideEffectSet take_effects(const ActorBehavior& behavior,
                             const Registry::ActorTypeInfo& info);

private:
  const Registry& registry_;
  kv::Store& store_;
  model::ActorId self_;
  SideEffectSet effects_;
  std::vector<detail::CollectionField*> tracked_;
  std::set<std::string> spawned_ids_;
};

// A live actor held in worker memory: the behavior object plus the last
// committed state so a failed commit can roll the object back.
class ActorInstance {
public:
  ActorInstance(const Registry* registry, const Registry::ActorTypeInfo* info,
                model::ActorId id, std::string committed_state);

  static ActorInstance from_record(const Registry& registry,
                                   const model::ActorStateRecord& record);
  static ActorInstance fresh(const Registry& registry, const model::ActorId& id,
                             const std::string& type_tag,
                             const std::string& initial_state);

  // Runs receive under a fresh context. Throws on application error, leaving
  // the in-memory state rolled back to the committed version.
  SideEffectSet process(kv::Store& store, const Message& msg);

  void commit(std::string new_state) { committed_state_ = std::move(new_state); }
  void rollback();

  const model::ActorId& id() const { return id_; }
  const std::string& type_tag() const { return info_->tag; }
  const std::string& committed_state() const { return committed_state_; }

private:
  void materialize();

  const Registry* registry_;
  const Registry::ActorTypeInfo* info_;
  model::ActorId id_;
  std::unique_ptr<ActorBehavior> behavior_;
  std::string committed_state_;
};

// ---- template definitions ----

template <typename A>
class Registry::ActorRegistrar {
public:
  ActorRegistrar(Registry* registry, ActorTypeInfo* info)
      : registry_(registry), info_(info) {}

  ActorRegistrar& sender(MessageSender A::* field) {
    info_->binders.push_back([field](ActorBehavior& b, ProcessingContext& ctx) {
      static_cast<A&>(b).*field = MessageSender(&ctx);
    });
    return *this;
  }

  ActorRegistrar& spawner(ActorSpawner A::* field) {
    info_->binders.push_back([field](ActorBehavior& b, ProcessingContext& ctx) {
      static_cast<A&>(b).*field = ActorSpawner(&ctx);
    });
    return *this;
  }

  template <typename T>
  ActorRegistrar& collection(Collection<T> A::* field, const std::string& name) {
    const auto& entry = registry_->item_entry<T>();  // must be registered first
    registry_->claim_collection_name(name);
    info_->collections.push_back({name, entry.queryables});
    info_->binders.push_back(
        [field, name](ActorBehavior& b, ProcessingContext& ctx) {
          (static_cast<A&>(b).*field).bind(ctx, name);
        });
    return *this;
  }

private:
  Registry* registry_;
  ActorTypeInfo* info_;
};

template <typename A>
Registry::ActorRegistrar<A> Registry::register_actor(const std::string& tag) {
  static_assert(std::is_base_of_v<ActorBehavior, A>,
                "actors must derive from ActorBehavior");
  ensure_new_actor(tag, std::type_index(typeid(A)));
  ActorTypeInfo info;
  info.tag = tag;
  info.create = [] { return std::unique_ptr<ActorBehavior>(new A()); };
  info.serialize_state = [](const ActorBehavior& b) {
    return Json(static_cast<const A&>(b)).dump();
  };
  info.load_state = [tag](ActorBehavior& b, const std::string& state) {
    parse_payload(tag, state).get_to(static_cast<A&>(b));
  };
  actor_tags_[std::type_index(typeid(A))] = tag;
  auto [it, inserted] = actors_.emplace(tag, std::move(info));
  (void)inserted;
  return ActorRegistrar<A>(this, &it->second);
}

template <typename T>
void MessageSender::tell(const model::ActorId& receiver, const T& msg) {
  if (!ctx_) {
    throw ApiError(ApiErrorKind::UnboundFeature,
                   "message sender used outside a processing call");
  }
  ctx_->add_outgoing(receiver, ctx_->registry().message_tag<T>(),
                     Registry::encode(msg));
}

template <typename T>
void MessageSender::tell_external(const std::string& correlation_id,
                                  const T& msg) {
  if (!ctx_) {
    throw ApiError(ApiErrorKind::UnboundFeature,
                   "message sender used outside a processing call");
  }
  ctx_->add_external(correlation_id, ctx_->registry().message_tag<T>(),
                     Registry::encode(msg));
}

template <typename T>
model::ActorId ActorSpawner::spawn(const T& prototype,
                                   const std::string& partition_name,
                                   const std::string& instance_id) {
  if (!ctx_) {
    throw ApiError(ApiErrorKind::UnboundFeature,
                   "spawner used outside a processing call");
  }
  const std::string& tag = ctx_->registry().actor_tag<T>();
  return ctx_->do_spawn(tag, Json(prototype).dump(), partition_name, instance_id);
}

template <typename T>
void Collection<T>::bind(ProcessingContext& ctx, const std::string& field_name) {
  ctx_ = &ctx;
  item_entry_ = &ctx.registry().item_entry<T>();
  table_ = model::collection_table_name(field_name);
  collection_id_ = model::collection_id(ctx.self(), field_name);
  cache_.clear();
  deleted_.clear();
  ctx.track(this);
}

template <typename T>
T& Collection<T>::get(const std::string& item_id) {
  ensure_bound();
  auto it = cache_.find(item_id);
  if (it != cache_.end()) return it->second.value;
  if (deleted_.count(item_id)) {
    throw ApiError(ApiErrorKind::ItemNotFound,
                   "item deleted in this call: " + item_id);
  }
  auto payload = ctx_->read_item(table_, collection_id_, item_id);
  if (!payload) {
    throw ApiError(ApiErrorKind::ItemNotFound,
                   "no item " + item_id + " in " + collection_id_);
  }
  Entry e;
  e.value = Registry::parse_payload(item_entry_->tag, *payload).template get<T>();
  e.pristine = *payload;
  auto [pos, _] = cache_.emplace(item_id, std::move(e));
  return pos->second.value;
}

template <typename T>
bool Collection<T>::contains(const std::string& item_id) {
  ensure_bound();
  if (cache_.count(item_id)) return true;
  if (deleted_.count(item_id)) return false;
  auto payload = ctx_->read_item(table_, collection_id_, item_id);
  if (!payload) return false;
  Entry e;
  e.value = Registry::parse_payload(item_entry_->tag, *payload).template get<T>();
  e.pristine = *payload;
  cache_.emplace(item_id, std::move(e));
  return true;
}

template <typename T>
void Collection<T>::put(const std::string& item_id, T value) {
  ensure_bound();
  deleted_.erase(item_id);
  Entry e;
  e.value = std::move(value);
  e.forced = true;
  cache_[item_id] = std::move(e);
}

template <typename T>
void Collection<T>::remove(const std::string& item_id) {
  ensure_bound();
  cache_.erase(item_id);
  deleted_.insert(item_id);
}

template <typename T>
std::vector<std::pair<std::string, T>> Collection<T>::find(
    const std::string& attribute, const std::string& value) {
  ensure_bound();
  const auto& declared = item_entry_->queryables;
  if (std::find(declared.begin(), declared.end(), attribute) == declared.end()) {
    throw ApiError(ApiErrorKind::UnknownQueryableAttribute,
                   "attribute not queryable: " + attribute);
  }
  const auto& exporter = std::any_cast<
      const std::function<std::map<std::string, std::string>(const T&)>&>(
      item_entry_->exporter);

  std::map<std::string, T> result;
  for (auto& [item_id, payload] :
       ctx_->find_committed(table_, collection_id_, attribute, value)) {
    if (cache_.count(item_id) || deleted_.count(item_id)) continue;
    result.emplace(item_id,
                   Registry::parse_payload(item_entry_->tag, payload).template get<T>());
  }
  // Local entries win over the committed index, matching their current value.
  for (const auto& [item_id, entry] : cache_) {
    auto attrs = exporter(entry.value);
    auto a = attrs.find(attribute);
    if (a != attrs.end() && a->second == value) {
      result.emplace(item_id, entry.value);
    }
  }
  std::vector<std::pair<std::string, T>> out;
  out.reserve(result.size());
  for (auto& [item_id, v] : result) out.emplace_back(item_id, std::move(v));
  return out;
}

template <typename T>
void Collection<T>::flush(SideEffectSet& out) {
  const auto& exporter = std::any_cast<
      const std::function<std::map<std::string, std::string>(const T&)>&>(
      item_entry_->exporter);
  for (auto& [item_id, entry] : cache_) {
    std::string bytes = Json(entry.value).dump();
    if (!entry.forced && bytes == entry.pristine) continue;
    DirtyItem d;
    d.table = table_;
    d.collection_id = collection_id_;
    d.item_id = item_id;
    d.payload = std::move(bytes);
    d.queryable_attributes = exporter(entry.value);
    out.dirty_items.push_back(std::move(d));
  }
  for (const auto& item_id : deleted_) {
    out.deleted_items.push_back({table_, collection_id_, item_id});
  }
}

}  // namespace troupe::api
