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

#include "troupe/model/ids.hpp"

#include <vector>

namespace troupe::model {

namespace {

void check_part(const std::string& part, const char* what) {
  if (part.empty()) {
    throw MalformedId(std::string(what) + " is empty");
  }
  if (part.find(kIdSeparator) != std::string::npos) {
    throw MalformedId(std::string(what) + " contains separator: " + part);
  }
}

std::vector<std::string> split_exact(const std::string& text, size_t parts) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    size_t pos = text.find(kIdSeparator, start);
    if (pos == std::string::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  if (out.size() != parts) {
    throw MalformedId("expected " + std::to_string(parts) + " parts: " + text);
  }
  return out;
}

}  // namespace

std::string ShardRef::canonical() const {
  check_part(partition_name, "partition_name");
  check_part(shard_id, "shard_id");
  return partition_name + kIdSeparator + shard_id;
}

ShardRef ShardRef::parse(const std::string& text) {
  auto parts = split_exact(text, 2);
  ShardRef r{std::move(parts[0]), std::move(parts[1])};
  check_part(r.partition_name, "partition_name");
  check_part(r.shard_id, "shard_id");
  return r;
}

std::string ActorId::canonical() const {
  check_part(partition_name, "partition_name");
  check_part(shard_id, "shard_id");
  check_part(instance_id, "instance_id");
  return partition_name + kIdSeparator + shard_id + kIdSeparator + instance_id;
}

ActorId ActorId::parse(const std::string& text) {
  auto parts = split_exact(text, 3);
  ActorId id{std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
  check_part(id.partition_name, "partition_name");
  check_part(id.shard_id, "shard_id");
  check_part(id.instance_id, "instance_id");
  return id;
}

uint64_t stable_hash64(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x00000100000001b3ull;
  }
  return h;
}

ShardRef assign_shard(const std::string& partition_name,
                      const std::string& instance_id,
                      const ShardPolicy& policy) {
  uint32_t buckets = policy.bucket_count ? policy.bucket_count : 1;
  uint64_t bucket = stable_hash64(instance_id) % buckets;
  return {partition_name, "s-" + std::to_string(bucket)};
}

}  // namespace troupe::model
