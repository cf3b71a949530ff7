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

#include <iosfwd>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "troupe/clock.hpp"
#include "troupe/kv/types.hpp"

namespace troupe::kv {

// Embedded transactional key-value store with conditional writes, multi-item
// serializable transactions, equality queries over text secondary indexes,
// and deterministic fault injection. Strongly consistent; safe for use from
// many threads.
//
// Isolation: two-phase locking. Key writers take their table lock shared plus
// per-key mutexes in deterministic (table, key) order; queries and scans take
// the table lock exclusive, so a multi-item read never observes part of a
// transaction.
class Store {
public:
  explicit Store(Clock& clock, StoreConfig cfg = {});
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  void create_table(TableSchema schema);
  bool has_table(const std::string& name) const;
  size_t transaction_item_limit() const { return cfg_.transaction_item_limit; }

  std::optional<Item> get(const std::string& table, const Key& key);
  std::vector<Item> query(const QuerySpec& spec);
  std::vector<Item> scan(const std::string& table);

  WriteResult write(const WriteAction& action);
  TxResult transact_write(const std::vector<WriteAction>& actions);

  void set_fault_plan(const FaultPlan& plan);

  std::vector<HistoryEntry> history() const;
  OpCounters counters() const;

  // One line per item: table | partition | sort | attr=value ...
  void dump(std::ostream& os) const;

private:
  struct Table;
  struct LockSet;

  Table& table_ref(const std::string& name);
  const Table& table_ref(const std::string& name) const;
  void validate_action(const WriteAction& a);
  // Returns false on condition failure; applies nothing in that case.
  bool evaluate_condition(Table& t, const Key& k, const std::optional<Condition>& c) const;
  void apply_action(Table& t, const WriteAction& a, std::vector<HistoryOp>* ops);
  void maintain_indexes(Table& t, const Key& k, const Item* before, const Item* after);
  bool roll_transient();
  void inject_latency();
  static Key extract_key(const Table& t, const Item& item);
  static const std::string& action_table(const WriteAction& a);
  static Key action_key_of(const Table& t, const WriteAction& a);

  Clock& clock_;
  StoreConfig cfg_;

  mutable std::shared_mutex registry_lock_;  // table map membership
  std::map<std::string, std::unique_ptr<Table>> tables_;

  std::mutex fault_mutex_;
  FaultPlan fault_;
  std::mt19937_64 fault_rng_;

  mutable std::mutex history_mutex_;
  std::vector<HistoryEntry> history_;
  uint64_t history_seq_ = 0;

  mutable std::mutex counter_mutex_;
  OpCounters counters_;
};

}  // namespace troupe::kv
