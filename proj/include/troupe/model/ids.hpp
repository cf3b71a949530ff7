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

#include <compare>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace troupe::model {

// Separator for canonical text forms; forbidden inside id parts.
inline constexpr char kIdSeparator = '/';

class MalformedId : public std::runtime_error {
public:
  explicit MalformedId(const std::string& what) : std::runtime_error(what) {}
};

// Physical shard: the unit of claiming, message grouping, and passivation.
// Canonical text form "partition_name/shard_id".
struct ShardRef {
  std::string partition_name;
  std::string shard_id;

  auto operator<=>(const ShardRef&) const = default;

  std::string canonical() const;
  static ShardRef parse(const std::string& text);
};

// Actor identity: partition, assigned shard, and a per-partition unique
// instance id. Canonical text form "partition_name/shard_id/instance_id".
struct ActorId {
  std::string partition_name;
  std::string shard_id;
  std::string instance_id;

  auto operator<=>(const ActorId&) const = default;

  std::string canonical() const;
  static ActorId parse(const std::string& text);
  ShardRef shard() const { return {partition_name, shard_id}; }
};

// How many shard buckets a partition spreads its actors over.
struct ShardPolicy {
  uint32_t bucket_count = 1;
};

// FNV-1a. Process-independent, unlike std::hash, so shard assignment and
// poll phases stay stable across runs and builds.
uint64_t stable_hash64(std::string_view text);

// Deterministic bucket assignment of an instance to a shard of its
// partition. Shard ids render as "s-<bucket>".
ShardRef assign_shard(const std::string& partition_name,
                      const std::string& instance_id,
                      const ShardPolicy& policy);

// Envelope ordering keys for one sender: wall milliseconds in the high bits
// with a per-sender sequence in the low 20, clamped to strictly increase.
class SenderTimestamps {
public:
  int64_t next(int64_t now_ms) {
    std::lock_guard<std::mutex> g(m_);
    int64_t floor = now_ms << 20;
    last_ = last_ + 1 > floor ? last_ + 1 : floor;
    return last_;
  }

private:
  std::mutex m_;
  int64_t last_ = 0;
};

}  // namespace troupe::model
