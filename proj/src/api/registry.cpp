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

Json Registry::parse_payload(const std::string& tag, const std::string& payload) {
  Json j = Json::parse(payload, nullptr, false);
  if (j.is_discarded()) {
    throw ApiError(ApiErrorKind::MalformedPayload,
                   "payload for " + tag + " is not well formed");
  }
  return j;
}

Message Registry::decode_message(const std::string& tag,
                                 const std::string& payload) const {
  auto it = message_decoders_.find(tag);
  if (it == message_decoders_.end()) {
    throw ApiError(ApiErrorKind::UnregisteredMessageType,
                   "unregistered message tag: " + tag);
  }
  try {
    return Message(tag, it->second(payload));
  } catch (const ApiError&) {
    throw;
  } catch (const std::exception& e) {
    throw ApiError(ApiErrorKind::MalformedPayload,
                   "payload for " + tag + " does not decode: " + e.what());
  }
}

const Registry::ActorTypeInfo& Registry::actor_info(const std::string& tag) const {
  auto it = actors_.find(tag);
  if (it == actors_.end()) {
    throw ApiError(ApiErrorKind::UnregisteredActorType,
                   "unregistered actor tag: " + tag);
  }
  return it->second;
}

void Registry::set_shard_policy(const std::string& partition_name,
                                uint32_t bucket_count) {
  if (bucket_count == 0) {
    throw std::invalid_argument("bucket_count must be at least 1");
  }
  partition_buckets_[partition_name] = bucket_count;
}

model::ShardPolicy Registry::shard_policy(const std::string& partition_name) const {
  auto it = partition_buckets_.find(partition_name);
  if (it != partition_buckets_.end()) return {it->second};
  return {default_bucket_count_};
}

std::vector<model::CollectionDecl> Registry::collection_decls() const {
  std::vector<model::CollectionDecl> out;
  for (const auto& [tag, info] : actors_) {
    for (const auto& decl : info.collections) out.push_back(decl);
  }
  return out;
}

void Registry::ensure_new_message(const std::string& tag, std::type_index type) {
  if (message_decoders_.count(tag) || message_tags_.count(type)) {
    throw ApiError(ApiErrorKind::DuplicateRegistration,
                   "message already registered: " + tag);
  }
}

void Registry::ensure_new_item(const std::string& tag, std::type_index type) {
  if (item_tags_.count(tag) || items_.count(type)) {
    throw ApiError(ApiErrorKind::DuplicateRegistration,
                   "item already registered: " + tag);
  }
  item_tags_.insert(tag);
}

void Registry::ensure_new_actor(const std::string& tag, std::type_index type) {
  if (actors_.count(tag) || actor_tags_.count(type)) {
    throw ApiError(ApiErrorKind::DuplicateRegistration,
                   "actor already registered: " + tag);
  }
}

void Registry::claim_collection_name(const std::string& name) {
  if (name.empty() || name.find(model::kIdSeparator) != std::string::npos ||
      name.find('#') != std::string::npos) {
    throw ApiError(ApiErrorKind::DuplicateRegistration,
                   "invalid collection name: " + name);
  }
  if (!collection_names_.insert(name).second) {
    throw ApiError(ApiErrorKind::DuplicateRegistration,
                   "collection name already in use: " + name);
  }
}

}  // namespace troupe::api
