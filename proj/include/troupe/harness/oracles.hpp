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
//
// Post-hoc correctness checks over the store's committed write history.
// The history is the ground truth the runtime cannot retroactively edit, so
// any duplicate delivery, double consumption, double reply, or reordering a
// faulty run produced is visible here no matter how the run ended.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "troupe/kv/store.hpp"

namespace troupe::harness {

struct OracleReport {
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
  void fail(std::string what) { failures.push_back(std::move(what)); }
  void merge(const OracleReport& other) {
    failures.insert(failures.end(), other.failures.begin(),
                    other.failures.end());
  }
};

// Every inbox envelope was written once and deleted once. With
// require_all_consumed, an envelope still sitting in an inbox at the end of
// the run is a failure too.
OracleReport check_exactly_once_consumption(
    const std::vector<kv::HistoryEntry>& history,
    bool require_all_consumed = true);

// No outbox correlation id was ever written twice: two commits answering the
// same request would both put the reply.
OracleReport check_single_reply_per_correlation(
    const std::vector<kv::HistoryEntry>& history);

// Per (sender, receiver) channel, envelopes are appended and consumed in
// strictly increasing timestamp order.
OracleReport check_fifo_per_channel(
    const std::vector<kv::HistoryEntry>& history);

// No pending work in storage: every inbox is empty and every actor task
// record has been passivated away.
bool storage_quiescent(kv::Store& store);

}  // namespace troupe::harness
