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

#include "troupe/kv/store.hpp"

#include <algorithm>
#include <cassert>
#include <ostream>

namespace troupe::kv {

struct Store::Table {
  TableSchema schema;
  std::map<Key, Item, KeyLess> items;
  // index name -> attribute text value -> keys holding it
  std::map<std::string, std::map<std::string, std::set<Key, KeyLess>>> indexes;
  mutable std::shared_mutex table_lock;
  std::mutex key_locks_mutex;
  std::map<Key, std::shared_ptr<std::mutex>, KeyLess> key_locks;

  std::shared_ptr<std::mutex> key_lock(const Key& k) {
    std::lock_guard<std::mutex> g(key_locks_mutex);
    auto it = key_locks.find(k);
    if (it == key_locks.end()) {
      it = key_locks.emplace(k, std::make_shared<std::mutex>()).first;
    }
    return it->second;
  }
};

namespace {

bool key_equal(const Key& a, const Key& b) {
  KeyLess less;
  return !less(a, b) && !less(b, a);
}

bool scalar_key_type(const AttributeValue& v) {
  return std::holds_alternative<std::string>(v) ||
         std::holds_alternative<int64_t>(v);
}

}  // namespace

Store::Store(Clock& clock, StoreConfig cfg) : clock_(clock), cfg_(cfg) {}
Store::~Store() = default;

void Store::create_table(TableSchema schema) {
  if (schema.name.empty() || schema.partition_key.empty()) {
    throw Error(ErrorCode::SchemaViolation, "table and partition key names required");
  }
  for (const auto& idx : schema.indexes) {
    if (idx.name.empty() || idx.attribute.empty()) {
      throw Error(ErrorCode::SchemaViolation,
                  "index name and attribute required: table " + schema.name);
    }
  }
  std::unique_lock<std::shared_mutex> g(registry_lock_);
  if (tables_.count(schema.name)) {
    throw Error(ErrorCode::DuplicateTable, "table exists: " + schema.name);
  }
  auto t = std::make_unique<Table>();
  t->schema = schema;
  for (const auto& idx : schema.indexes) {
    t->indexes[idx.name];
  }
  tables_.emplace(schema.name, std::move(t));
}

bool Store::has_table(const std::string& name) const {
  std::shared_lock<std::shared_mutex> g(registry_lock_);
  return tables_.count(name) > 0;
}

Store::Table& Store::table_ref(const std::string& name) {
  auto it = tables_.find(name);
  if (it == tables_.end()) {
    throw Error(ErrorCode::UnknownTable, "unknown table: " + name);
  }
  return *it->second;
}

const Store::Table& Store::table_ref(const std::string& name) const {
  auto it = tables_.find(name);
  if (it == tables_.end()) {
    throw Error(ErrorCode::UnknownTable, "unknown table: " + name);
  }
  return *it->second;
}

Key Store::extract_key(const Table& t, const Item& item) {
  Key k;
  auto pit = item.attrs.find(t.schema.partition_key);
  if (pit == item.attrs.end() || !scalar_key_type(pit->second)) {
    throw Error(ErrorCode::SchemaViolation,
                "item lacks scalar partition key '" + t.schema.partition_key +
                    "' for table " + t.schema.name);
  }
  k.partition = pit->second;
  if (t.schema.sort_key) {
    auto sit = item.attrs.find(*t.schema.sort_key);
    if (sit == item.attrs.end() || !scalar_key_type(sit->second)) {
      throw Error(ErrorCode::SchemaViolation,
                  "item lacks scalar sort key '" + *t.schema.sort_key +
                      "' for table " + t.schema.name);
    }
    k.sort = sit->second;
  }
  return k;
}

const std::string& Store::action_table(const WriteAction& a) {
  return std::visit([](const auto& x) -> const std::string& { return x.table; }, a);
}

Key Store::action_key_of(const Table& t, const WriteAction& a) {
  if (const auto* p = std::get_if<Put>(&a)) return extract_key(t, p->item);
  if (const auto* u = std::get_if<Update>(&a)) return u->key;
  if (const auto* d = std::get_if<Delete>(&a)) return d->key;
  return std::get<ConditionCheck>(a).key;
}

void Store::validate_action(const WriteAction& a) {
  // Key shape against the schema; content checks happen under locks.
  std::shared_lock<std::shared_mutex> g(registry_lock_);
  const Table& t = table_ref(action_table(a));
  Key k = action_key_of(t, a);
  if (t.schema.sort_key && !k.sort) {
    throw Error(ErrorCode::SchemaViolation,
                "key is missing sort component for table " + t.schema.name);
  }
  if (!t.schema.sort_key && k.sort) {
    throw Error(ErrorCode::SchemaViolation,
                "table " + t.schema.name + " has no sort key");
  }
  if (!scalar_key_type(k.partition) || (k.sort && !scalar_key_type(*k.sort))) {
    throw Error(ErrorCode::SchemaViolation, "key components must be text or integer");
  }
}

bool Store::roll_transient() {
  std::lock_guard<std::mutex> g(fault_mutex_);
  if (!fault_.enabled || fault_.transient_failure_probability <= 0.0) return false;
  std::bernoulli_distribution d(fault_.transient_failure_probability);
  return d(fault_rng_);
}

void Store::inject_latency() {
  int64_t lat = 0;
  {
    std::lock_guard<std::mutex> g(fault_mutex_);
    if (!fault_.enabled || fault_.latency_max_us <= 0) return;
    std::uniform_int_distribution<int64_t> d(fault_.latency_min_us,
                                             fault_.latency_max_us);
    lat = d(fault_rng_);
  }
  if (lat > 0) clock_.sleep_for_us(lat);
}

void Store::set_fault_plan(const FaultPlan& plan) {
  std::lock_guard<std::mutex> g(fault_mutex_);
  fault_ = plan;
  fault_rng_.seed(plan.seed);
}

std::optional<Item> Store::get(const std::string& table, const Key& key) {
  {
    std::lock_guard<std::mutex> g(counter_mutex_);
    counters_.gets++;
  }
  inject_latency();
  std::shared_lock<std::shared_mutex> reg(registry_lock_);
  Table& t = table_ref(table);
  std::shared_lock<std::shared_mutex> tl(t.table_lock);
  auto lock = t.key_lock(key);
  std::lock_guard<std::mutex> kg(*lock);
  auto it = t.items.find(key);
  if (it == t.items.end()) return std::nullopt;
  return it->second;
}

std::vector<Item> Store::query(const QuerySpec& spec) {
  {
    std::lock_guard<std::mutex> g(counter_mutex_);
    counters_.queries++;
  }
  inject_latency();
  std::shared_lock<std::shared_mutex> reg(registry_lock_);
  Table& t = table_ref(spec.table);
  std::unique_lock<std::shared_mutex> tl(t.table_lock);

  std::vector<Item> out;
  if (!spec.index) {
    Key from{spec.partition_value, std::nullopt};
    for (auto it = t.items.lower_bound(from); it != t.items.end(); ++it) {
      if (!loose_equals(it->first.partition, spec.partition_value)) break;
      out.push_back(it->second);
    }
  } else {
    auto idx_it = t.indexes.find(*spec.index);
    if (idx_it == t.indexes.end()) {
      throw Error(ErrorCode::UnknownIndex,
                  "unknown index " + *spec.index + " on table " + spec.table);
    }
    const auto& buckets = idx_it->second;
    if (!spec.equality_on_indexed_attr) {
      // Lookup by the indexed attribute itself.
      if (!std::holds_alternative<std::string>(spec.partition_value)) {
        throw Error(ErrorCode::TypeMismatch, "indexed attributes are text-valued");
      }
      auto b = buckets.find(std::get<std::string>(spec.partition_value));
      if (b != buckets.end()) {
        for (const auto& k : b->second) out.push_back(t.items.at(k));
      }
    } else {
      // Partition-scoped: equality constrains the indexed attribute.
      if (!std::holds_alternative<std::string>(*spec.equality_on_indexed_attr)) {
        throw Error(ErrorCode::TypeMismatch, "indexed attributes are text-valued");
      }
      auto b = buckets.find(std::get<std::string>(*spec.equality_on_indexed_attr));
      if (b != buckets.end()) {
        for (const auto& k : b->second) {
          if (loose_equals(k.partition, spec.partition_value)) {
            out.push_back(t.items.at(k));
          }
        }
      }
    }
  }
  if (!spec.ascending) std::reverse(out.begin(), out.end());
  if (spec.limit && out.size() > *spec.limit) out.resize(*spec.limit);
  return out;
}

std::vector<Item> Store::scan(const std::string& table) {
  std::shared_lock<std::shared_mutex> reg(registry_lock_);
  Table& t = table_ref(table);
  std::unique_lock<std::shared_mutex> tl(t.table_lock);
  std::vector<Item> out;
  out.reserve(t.items.size());
  for (const auto& [k, item] : t.items) out.push_back(item);
  return out;
}

bool Store::evaluate_condition(Table& t, const Key& k,
                               const std::optional<Condition>& c) const {
  if (!c) return true;
  auto it = t.items.find(k);
  const Item* item = it == t.items.end() ? nullptr : &it->second;
  return c->evaluate(item);
}

void Store::maintain_indexes(Table& t, const Key& k, const Item* before,
                             const Item* after) {
  for (const auto& idx : t.schema.indexes) {
    auto& buckets = t.indexes[idx.name];
    const std::string* old_val = nullptr;
    const std::string* new_val = nullptr;
    if (before) {
      auto it = before->attrs.find(idx.attribute);
      if (it != before->attrs.end()) old_val = std::get_if<std::string>(&it->second);
    }
    if (after) {
      auto it = after->attrs.find(idx.attribute);
      if (it != after->attrs.end()) new_val = std::get_if<std::string>(&it->second);
    }
    if (old_val && (!new_val || *new_val != *old_val)) {
      auto b = buckets.find(*old_val);
      if (b != buckets.end()) {
        b->second.erase(k);
        if (b->second.empty()) buckets.erase(b);
      }
    }
    if (new_val && (!old_val || *new_val != *old_val)) {
      buckets[*new_val].insert(k);
    }
  }
}

void Store::apply_action(Table& t, const WriteAction& a,
                         std::vector<HistoryOp>* ops) {
  if (const auto* p = std::get_if<Put>(&a)) {
    Key k = extract_key(t, p->item);
    auto it = t.items.find(k);
    const Item* before = it == t.items.end() ? nullptr : &it->second;
    maintain_indexes(t, k, before, &p->item);
    t.items[k] = p->item;
    if (ops) ops->push_back({HistoryOp::Kind::Put, t.schema.name, k, p->item.attrs});
    return;
  }
  if (const auto* u = std::get_if<Update>(&a)) {
    auto it = t.items.find(u->key);
    Item next;
    const Item* before = nullptr;
    if (it == t.items.end()) {
      next.attrs[t.schema.partition_key] = u->key.partition;
      if (t.schema.sort_key) next.attrs[*t.schema.sort_key] = *u->key.sort;
    } else {
      before = &it->second;
      next = it->second;
    }
    for (const auto& [name, v] : u->set_if_absent) {
      next.attrs.emplace(name, v);
    }
    for (const auto& [name, v] : u->set) {
      next.attrs[name] = v;
    }
    for (const auto& [name, delta] : u->increment) {
      auto a_it = next.attrs.find(name);
      if (a_it == next.attrs.end()) {
        next.attrs[name] = delta;
      } else {
        a_it->second = std::get<int64_t>(a_it->second) + delta;
      }
    }
    maintain_indexes(t, u->key, before, &next);
    t.items[u->key] = std::move(next);
    if (ops) {
      ops->push_back({HistoryOp::Kind::Update, t.schema.name, u->key,
                      t.items[u->key].attrs});
    }
    return;
  }
  if (const auto* d = std::get_if<Delete>(&a)) {
    auto it = t.items.find(d->key);
    if (it != t.items.end()) {
      maintain_indexes(t, d->key, &it->second, nullptr);
      t.items.erase(it);
    }
    if (ops) ops->push_back({HistoryOp::Kind::Delete, t.schema.name, d->key, {}});
    return;
  }
  const auto& c = std::get<ConditionCheck>(a);
  if (ops) ops->push_back({HistoryOp::Kind::Check, t.schema.name, c.key, {}});
}

namespace {

// Pre-apply content validation so a transaction can never fail midway.
void check_appliable(const TableSchema& schema,
                     const std::map<Key, Item, KeyLess>& items,
                     const WriteAction& a) {
  if (const auto* u = std::get_if<Update>(&a)) {
    for (const auto& kv : u->set) {
      if (kv.first == schema.partition_key ||
          (schema.sort_key && kv.first == *schema.sort_key)) {
        throw Error(ErrorCode::SchemaViolation,
                    "cannot modify key attribute '" + kv.first + "'");
      }
    }
    auto it = items.find(u->key);
    for (const auto& [name, delta] : u->increment) {
      (void)delta;
      // Effective pre-increment value: set wins, then the stored attribute,
      // then set_if_absent; absent increments from zero.
      const AttributeValue* effective = nullptr;
      if (auto s = u->set.find(name); s != u->set.end()) {
        effective = &s->second;
      } else if (it != items.end()) {
        if (auto b = it->second.attrs.find(name); b != it->second.attrs.end()) {
          effective = &b->second;
        }
      }
      if (!effective) {
        if (auto sa = u->set_if_absent.find(name); sa != u->set_if_absent.end()) {
          effective = &sa->second;
        }
      }
      if (effective && !std::holds_alternative<int64_t>(*effective)) {
        throw Error(ErrorCode::TypeMismatch,
                    "increment on non-integer attribute '" + name + "'");
      }
    }
  }
  // Indexed attributes must stay text-valued on the resulting item.
  auto check_indexed = [&](const Attributes& attrs) {
    for (const auto& idx : schema.indexes) {
      auto it = attrs.find(idx.attribute);
      if (it != attrs.end() && !std::holds_alternative<std::string>(it->second)) {
        throw Error(ErrorCode::TypeMismatch,
                    "indexed attribute '" + idx.attribute + "' must be text");
      }
    }
  };
  if (const auto* p = std::get_if<Put>(&a)) {
    check_indexed(p->item.attrs);
  } else if (const auto* u = std::get_if<Update>(&a)) {
    for (const auto& idx : schema.indexes) {
      auto s = u->set.find(idx.attribute);
      if (s != u->set.end() && !std::holds_alternative<std::string>(s->second)) {
        throw Error(ErrorCode::TypeMismatch,
                    "indexed attribute '" + idx.attribute + "' must be text");
      }
      auto sa = u->set_if_absent.find(idx.attribute);
      if (sa != u->set_if_absent.end() &&
          !std::holds_alternative<std::string>(sa->second)) {
        throw Error(ErrorCode::TypeMismatch,
                    "indexed attribute '" + idx.attribute + "' must be text");
      }
      if (u->increment.count(idx.attribute)) {
        throw Error(ErrorCode::TypeMismatch,
                    "indexed attribute '" + idx.attribute + "' must be text");
      }
    }
  }
}

}  // namespace

WriteResult Store::write(const WriteAction& action) {
  if (std::holds_alternative<ConditionCheck>(action)) {
    throw Error(ErrorCode::InvalidAction, "standalone condition check");
  }
  {
    std::lock_guard<std::mutex> g(counter_mutex_);
    counters_.writes++;
  }
  validate_action(action);
  inject_latency();
  if (roll_transient()) {
    std::lock_guard<std::mutex> g(counter_mutex_);
    counters_.transient_failures++;
    return {WriteStatus::TransientFailure, std::nullopt};
  }

  std::shared_lock<std::shared_mutex> reg(registry_lock_);
  Table& t = table_ref(action_table(action));
  Key k = action_key_of(t, action);
  std::shared_lock<std::shared_mutex> tl(t.table_lock);
  auto lock = t.key_lock(k);
  std::lock_guard<std::mutex> kg(*lock);

  const std::optional<Condition>* cond = std::visit(
      [](const auto& x) -> const std::optional<Condition>* {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, ConditionCheck>) {
          return nullptr;
        } else {
          return &x.condition;
        }
      },
      action);
  if (cond && !evaluate_condition(t, k, *cond)) {
    std::lock_guard<std::mutex> g(counter_mutex_);
    counters_.condition_failures++;
    return {WriteStatus::ConditionFailed, std::nullopt};
  }
  check_appliable(t.schema, t.items, action);

  std::vector<HistoryOp> ops;
  apply_action(t, action, cfg_.record_history ? &ops : nullptr);
  if (cfg_.record_history) {
    std::lock_guard<std::mutex> hg(history_mutex_);
    history_.push_back({++history_seq_, std::move(ops)});
  }
  WriteResult r;
  r.status = WriteStatus::Committed;
  auto it = t.items.find(k);
  if (it != t.items.end()) r.item = it->second;
  return r;
}

struct Store::LockSet {
  std::vector<std::shared_lock<std::shared_mutex>> table_locks;
  std::vector<std::shared_ptr<std::mutex>> key_mutexes;  // keep-alive
  std::vector<std::unique_lock<std::mutex>> key_locks;
};

TxResult Store::transact_write(const std::vector<WriteAction>& actions) {
  if (actions.empty()) {
    throw Error(ErrorCode::InvalidAction, "empty transaction");
  }
  if (actions.size() > cfg_.transaction_item_limit) {
    throw Error(ErrorCode::LimitExceeded,
                "transaction exceeds " +
                    std::to_string(cfg_.transaction_item_limit) + " actions");
  }
  {
    std::lock_guard<std::mutex> g(counter_mutex_);
    counters_.transactions++;
  }
  struct Target {
    std::string table;
    Key key;
  };
  std::vector<Target> targets;
  targets.reserve(actions.size());
  {
    std::shared_lock<std::shared_mutex> reg(registry_lock_);
    for (const auto& a : actions) {
      Table& t = table_ref(action_table(a));
      targets.push_back({t.schema.name, action_key_of(t, a)});
    }
  }
  for (const auto& a : actions) validate_action(a);
  {
    // One action per (table, key).
    std::vector<const Target*> sorted;
    for (const auto& t : targets) sorted.push_back(&t);
    KeyLess less;
    std::sort(sorted.begin(), sorted.end(), [&](const Target* a, const Target* b) {
      if (a->table != b->table) return a->table < b->table;
      return less(a->key, b->key);
    });
    for (size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i - 1]->table == sorted[i]->table &&
          key_equal(sorted[i - 1]->key, sorted[i]->key)) {
        throw Error(ErrorCode::DuplicateKeyInTransaction,
                    "duplicate key in transaction: table " + sorted[i]->table);
      }
    }
  }

  inject_latency();
  if (roll_transient()) {
    std::lock_guard<std::mutex> g(counter_mutex_);
    counters_.transient_failures++;
    return {WriteStatus::TransientFailure, -1};
  }

  std::shared_lock<std::shared_mutex> reg(registry_lock_);
  LockSet locks;
  {
    // Deterministic acquisition order: tables by name, then keys by
    // (table, key). Two-phase: everything held until commit.
    std::vector<std::string> table_names;
    for (const auto& t : targets) table_names.push_back(t.table);
    std::sort(table_names.begin(), table_names.end());
    table_names.erase(std::unique(table_names.begin(), table_names.end()),
                      table_names.end());
    for (const auto& name : table_names) {
      locks.table_locks.emplace_back(table_ref(name).table_lock);
    }
    std::vector<size_t> order(targets.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    KeyLess less;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (targets[a].table != targets[b].table) {
        return targets[a].table < targets[b].table;
      }
      return less(targets[a].key, targets[b].key);
    });
    for (size_t i : order) {
      Table& t = table_ref(targets[i].table);
      auto m = t.key_lock(targets[i].key);
      locks.key_locks.emplace_back(*m);
      locks.key_mutexes.push_back(std::move(m));
    }
  }

  // All conditions against the current state, reported by submitted order.
  for (size_t i = 0; i < actions.size(); ++i) {
    Table& t = table_ref(targets[i].table);
    bool pass;
    if (const auto* c = std::get_if<ConditionCheck>(&actions[i])) {
      pass = evaluate_condition(t, targets[i].key, c->condition);
    } else {
      const auto& cond = std::visit(
          [](const auto& x) -> const std::optional<Condition>& {
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>,
                                         ConditionCheck>) {
              static const std::optional<Condition> none;
              return none;
            } else {
              return x.condition;
            }
          },
          actions[i]);
      pass = evaluate_condition(t, targets[i].key, cond);
    }
    if (!pass) {
      std::lock_guard<std::mutex> g(counter_mutex_);
      counters_.condition_failures++;
      return {WriteStatus::ConditionFailed, static_cast<int>(i)};
    }
  }
  for (size_t i = 0; i < actions.size(); ++i) {
    Table& t = table_ref(targets[i].table);
    check_appliable(t.schema, t.items, actions[i]);
  }

  std::vector<HistoryOp> ops;
  for (size_t i = 0; i < actions.size(); ++i) {
    Table& t = table_ref(targets[i].table);
    apply_action(t, actions[i], cfg_.record_history ? &ops : nullptr);
  }
  if (cfg_.record_history) {
    // Appended while the key locks are held so history order matches the
    // serialization order.
    std::lock_guard<std::mutex> hg(history_mutex_);
    history_.push_back({++history_seq_, std::move(ops)});
  }
  return {WriteStatus::Committed, -1};
}

std::vector<HistoryEntry> Store::history() const {
  std::lock_guard<std::mutex> g(history_mutex_);
  return history_;
}

OpCounters Store::counters() const {
  std::lock_guard<std::mutex> g(counter_mutex_);
  return counters_;
}

void Store::dump(std::ostream& os) const {
  std::shared_lock<std::shared_mutex> reg(registry_lock_);
  for (const auto& [name, t] : tables_) {
    std::unique_lock<std::shared_mutex> tl(t->table_lock);
    for (const auto& [k, item] : t->items) {
      os << name << " " << t->schema.partition_key << "=" << to_display(k.partition);
      if (k.sort) os << " " << *t->schema.sort_key << "=" << to_display(*k.sort);
      for (const auto& [an, av] : item.attrs) {
        if (an == t->schema.partition_key) continue;
        if (t->schema.sort_key && an == *t->schema.sort_key) continue;
        os << " " << an << "=" << to_display(av);
      }
      os << "\n";
    }
  }
}

}  // namespace troupe::kv
