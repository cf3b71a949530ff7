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

#include "troupe/api/api.hpp"

namespace troupe::api {

ProcessingContext::ProcessingContext(const Registry& registry, kv::Store& store,
                                     model::ActorId self)
    : registry_(registry), store_(store), self_(std::move(self)) {}

void ProcessingContext::add_outgoing(const model::ActorId& receiver,
                                     std::string type_tag, std::string payload) {
  effects_.outgoing.push_back({receiver, std::move(type_tag), std::move(payload)});
}

void ProcessingContext::add_external(std::string correlation_id,
                                     std::string type_tag, std::string payload) {
  effects_.external.push_back(
      {std::move(correlation_id), std::move(type_tag), std::move(payload)});
}

model::ActorId ProcessingContext::do_spawn(const std::string& type_tag,
                                           std::string initial_state,
                                           const std::string& partition_name,
                                           const std::string& instance_id) {
  auto shard = model::assign_shard(partition_name, instance_id,
                                   registry_.shard_policy(partition_name));
  model::ActorId id{partition_name, shard.shard_id, instance_id};
  std::string canonical = id.canonical();  // validates the parts
  if (!spawned_ids_.insert(canonical).second) {
    throw ApiError(ApiErrorKind::DuplicateSpawn,
                   "already spawned in this call: " + canonical);
  }
  effects_.spawns.push_back({id, type_tag, std::move(initial_state)});
  return id;
}

std::optional<std::string> ProcessingContext::read_item(
    const std::string& table, const std::string& collection_id,
    const std::string& item_id) {
  auto item = store_.get(
      table, kv::Key{collection_id, std::optional<kv::AttributeValue>(item_id)});
  if (!item) return std::nullopt;
  return std::get<kv::Bytes>(item->attrs.at("payload")).data;
}

std::vector<std::pair<std::string, std::string>> ProcessingContext::find_committed(
    const std::string& table, const std::string& collection_id,
    const std::string& attribute, const std::string& value) {
  kv::QuerySpec spec;
  spec.table = table;
  spec.index = model::collection_index_name(attribute);
  spec.partition_value = collection_id;
  spec.equality_on_indexed_attr = value;
  auto items = store_.query(spec);
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    out.emplace_back(std::get<std::string>(item.attrs.at("item_id")),
                     std::get<kv::Bytes>(item.attrs.at("payload")).data);
  }
  return out;
}

void ProcessingContext::track(detail::CollectionField* field) {
  tracked_.push_back(field);
}

SideEffectSet ProcessingContext::take_effects(const ActorBehavior& behavior,
                                              const Registry::ActorTypeInfo& info) {
  effects_.new_actor_state = info.serialize_state(behavior);
  for (auto* field : tracked_) field->flush(effects_);
  return std::move(effects_);
}

ActorInstance::ActorInstance(const Registry* registry,
                             const Registry::ActorTypeInfo* info,
                             model::ActorId id, std::string committed_state)
    : registry_(registry),
      info_(info),
      id_(std::move(id)),
      committed_state_(std::move(committed_state)) {}

ActorInstance ActorInstance::from_record(const Registry& registry,
                                         const model::ActorStateRecord& record) {
  const auto& info = registry.actor_info(record.type_tag);
  return ActorInstance(&registry, &info, record.actor_id, record.state);
}

ActorInstance ActorInstance::fresh(const Registry& registry,
                                   const model::ActorId& id,
                                   const std::string& type_tag,
                                   const std::string& initial_state) {
  const auto& info = registry.actor_info(type_tag);
  return ActorInstance(&registry, &info, id, initial_state);
}

void ActorInstance::materialize() {
  if (behavior_) return;
  behavior_ = info_->create();
  info_->load_state(*behavior_, committed_state_);
  behavior_->bind_self(id_);
}

void ActorInstance::rollback() {
  if (!behavior_) return;
  info_->load_state(*behavior_, committed_state_);
}

SideEffectSet ActorInstance::process(kv::Store& store, const Message& msg) {
  materialize();
  ProcessingContext ctx(*registry_, store, id_);
  for (const auto& binder : info_->binders) binder(*behavior_, ctx);
  try {
    behavior_->receive(msg);
  } catch (...) {
    rollback();
    throw;
  }
  return ctx.take_effects(*behavior_, *info_);
}

}  // namespace troupe::api
