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
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace troupe::kv {

enum class ErrorCode {
  UnknownTable,
  DuplicateTable,
  UnknownIndex,
  TypeMismatch,
  SchemaViolation,
  LimitExceeded,
  DuplicateKeyInTransaction,
  InvalidAction,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

// Distinct from text so payload bytes never collate with plain strings.
struct Bytes {
  std::string data;
  auto operator<=>(const Bytes&) const = default;
};

using AttributeValue = std::variant<std::string, int64_t, bool, Bytes>;
using Attributes = std::map<std::string, AttributeValue>;

// Total order within one variant; ordered comparison across variants throws
// TypeMismatch. Equality across variants is false (conditions stay total).
int compare(const AttributeValue& a, const AttributeValue& b);
bool loose_equals(const AttributeValue& a, const AttributeValue& b);
std::string to_display(const AttributeValue& v);

struct Key {
  AttributeValue partition;
  std::optional<AttributeValue> sort;
};

// Container order: variant tag first, then value. Heterogeneous keys in one
// table stay well ordered even though semantic compare() would reject them.
struct KeyLess {
  bool operator()(const AttributeValue& a, const AttributeValue& b) const;
  bool operator()(const Key& a, const Key& b) const;
};

struct Item {
  Attributes attrs;
};

struct IndexDef {
  std::string name;
  std::string attribute;  // indexed attributes are text-valued
};

struct TableSchema {
  std::string name;
  std::string partition_key;
  std::optional<std::string> sort_key;
  std::vector<IndexDef> indexes;
};

// Condition expression tree: Exists / NotExists (whole item), Equals(attr,
// value), And(...). Evaluable against an item or against item absence.
class Condition {
public:
  static Condition exists();
  static Condition not_exists();
  static Condition equals(std::string attribute, AttributeValue value);
  static Condition all_of(std::vector<Condition> parts);

  bool evaluate(const Item* item) const;  // nullptr = item absent
  std::string to_display() const;

private:
  enum class Kind { Exists, NotExists, Equals, And };
  Kind kind_ = Kind::Exists;
  std::string attribute_;
  AttributeValue value_;
  std::vector<Condition> parts_;
};

struct Put {
  std::string table;
  Item item;
  std::optional<Condition> condition;
};

// Creates the item when absent (if the condition allows): set_if_absent
// seeds attributes only when missing, increment treats a missing integer
// attribute as zero.
struct Update {
  std::string table;
  Key key;
  Attributes set;
  Attributes set_if_absent;
  std::map<std::string, int64_t> increment;
  std::optional<Condition> condition;
};

struct Delete {
  std::string table;
  Key key;
  std::optional<Condition> condition;
};

struct ConditionCheck {
  std::string table;
  Key key;
  Condition condition;
};

using WriteAction = std::variant<Put, Update, Delete, ConditionCheck>;

enum class WriteStatus { Committed, ConditionFailed, TransientFailure };

struct WriteResult {
  WriteStatus status = WriteStatus::Committed;
  std::optional<Item> item;  // new value; empty after a delete
  bool ok() const { return status == WriteStatus::Committed; }
};

struct TxResult {
  WriteStatus status = WriteStatus::Committed;
  int failed_index = -1;  // first failing action on ConditionFailed
  bool ok() const { return status == WriteStatus::Committed; }
};

struct QuerySpec {
  std::string table;
  std::optional<std::string> index;
  // Base-table query: value of the partition key. Index query without
  // equality: value of the indexed attribute (worker-by-id style lookups).
  // Index query with equality: table partition key value, while equality
  // constrains the indexed attribute (collection find).
  AttributeValue partition_value;
  std::optional<AttributeValue> equality_on_indexed_attr;
  bool ascending = true;
  std::optional<size_t> limit;
};

// Deterministic, seed-driven fault injection. Transient failures hit writes
// and transactions only, always before any effect; latency is sampled per
// operation and slept before any internal lock is taken.
struct FaultPlan {
  bool enabled = false;
  uint64_t seed = 0;
  double transient_failure_probability = 0.0;
  int64_t latency_min_us = 0;
  int64_t latency_max_us = 0;
};

struct StoreConfig {
  size_t transaction_item_limit = 100;
  bool record_history = false;
};

struct HistoryOp {
  enum class Kind { Put, Update, Delete, Check };
  Kind kind;
  std::string table;
  Key key;
  Attributes attrs_after;  // puts/updates only
};

struct HistoryEntry {
  uint64_t seq = 0;
  std::vector<HistoryOp> ops;
};

struct OpCounters {
  uint64_t gets = 0;
  uint64_t queries = 0;
  uint64_t writes = 0;
  uint64_t transactions = 0;
  uint64_t transient_failures = 0;
  uint64_t condition_failures = 0;
};

}  // namespace troupe::kv
