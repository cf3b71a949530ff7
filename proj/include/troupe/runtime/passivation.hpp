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

#include <functional>
#include <string>

#include "troupe/kv/store.hpp"
#include "troupe/model/ids.hpp"

namespace troupe::runtime {

enum class PassivationOutcome {
  Passive,    // task record deleted; shard exists again only when messaged
  Aborted,    // a message raced in; shard unsealed and still owned
  Lost,       // ownership gone mid-protocol; drop the shard
  Cancelled,  // caller shutting down; shard left as-is (possibly sealed)
};

enum class PassivationStep { BeforeSeal, BeforeCheck, BeforeDelete, AfterDelete };

// Test instrumentation: invoked at each protocol step so interleaving suites
// can run concurrent sender commits at exact points.
using PassivationProbe = std::function<void(PassivationStep)>;

// Three-step sealing protocol: (1) seal the task record (condition: owned,
// unsealed) and note its msg_count; (2) strongly consistent inbox check,
// non-empty aborts; (3) delete the record (condition: owned, sealed,
// msg_count unchanged), a failed condition aborts. Aborting unseals. Senders
// bump msg_count inside their own commit, so any send that slips between the
// inbox check and the delete flips the delete's condition; a send after the
// delete recreates the record free-for-claim via the sender's upsert.
// Transient storage failures retry the failed step; cancelled() stops between
// steps.
PassivationOutcome passivate_shard(kv::Store& store,
                                   const std::string& worker_id,
                                   const model::ShardRef& shard,
                                   const PassivationProbe& probe = {},
                                   const std::function<bool()>& cancelled = {});

}  // namespace troupe::runtime
