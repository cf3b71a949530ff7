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

// Store property checks shared between the unit tests (small trial counts)
// and the acceptance suite (full trial counts). Each check builds its own
// store and real clock and returns a pass/fail plus a human-readable detail.

#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "troupe/clock.hpp"
#include "troupe/kv/store.hpp"

namespace kvprops {

struct PropResult {
  bool ok = true;
  std::string detail;
};

// Concurrent conditional updates on one key: per round, every thread attempts
// version r -> r+1 and exactly one may win.
inline PropResult cas_single_winner(int threads, int rounds) {
  using namespace troupe;
  using namespace troupe::kv;
  RealClock clock;
  Store store(clock);
  store.create_table({"t", "k", std::nullopt, {}});
  store.write(Put{"t", Item{{{"k", std::string("x")}, {"version", int64_t{0}}}}, {}});

  std::vector<int> wins_per_round(rounds, 0);
  std::vector<std::thread> pool;
  std::mutex wins_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      (void)t;
      for (int r = 0; r < rounds; ++r) {
        for (;;) {
          auto res = store.write(Update{
              "t",
              Key{std::string("x"), std::nullopt},
              {{"version", int64_t{r + 1}}},
              {},
              {},
              Condition::equals("version", int64_t{r})});
          if (res.status == WriteStatus::Committed) {
            std::lock_guard<std::mutex> g(wins_mutex);
            wins_per_round[r]++;
            break;
          }
          if (res.status == WriteStatus::ConditionFailed) break;
        }
      }
    });
  }
  for (auto& th : pool) th.join();

  for (int r = 0; r < rounds; ++r) {
    if (wins_per_round[r] != 1) {
      std::ostringstream os;
      os << "round " << r << " had " << wins_per_round[r] << " winners";
      return {false, os.str()};
    }
  }
  auto item = store.get("t", Key{std::string("x"), std::nullopt});
  if (!item || std::get<int64_t>(item->attrs.at("version")) != rounds) {
    return {false, "final version does not equal round count"};
  }
  return {true, std::to_string(rounds) + " rounds, one winner each"};
}

// A transaction that writes two items in one partition must become visible
// atomically: a partition query never sees them disagree.
inline PropResult atomic_visibility(int iterations) {
  using namespace troupe;
  using namespace troupe::kv;
  RealClock clock;
  Store store(clock);
  store.create_table({"t", "p", std::optional<std::string>("s"), {}});
  store.transact_write({
      Put{"t", Item{{{"p", std::string("x")}, {"s", std::string("1")}, {"v", int64_t{0}}}}, {}},
      Put{"t", Item{{{"p", std::string("x")}, {"s", std::string("2")}, {"v", int64_t{0}}}}, {}},
  });

  std::atomic<bool> stop{false};
  std::atomic<bool> torn{false};
  std::atomic<int64_t> torn_a{0}, torn_b{0};
  std::thread writer([&] {
    for (int i = 1; i <= iterations; ++i) {
      store.transact_write({
          Put{"t", Item{{{"p", std::string("x")}, {"s", std::string("1")}, {"v", int64_t{i}}}}, {}},
          Put{"t", Item{{{"p", std::string("x")}, {"s", std::string("2")}, {"v", int64_t{i}}}}, {}},
      });
    }
    stop = true;
  });
  std::thread reader([&] {
    while (!stop && !torn) {
      auto items = store.query(QuerySpec{"t", std::nullopt, std::string("x"), std::nullopt, true, std::nullopt});
      if (items.size() != 2) {
        torn = true;
        break;
      }
      int64_t a = std::get<int64_t>(items[0].attrs.at("v"));
      int64_t b = std::get<int64_t>(items[1].attrs.at("v"));
      if (a != b) {
        torn_a = a;
        torn_b = b;
        torn = true;
      }
    }
  });
  writer.join();
  reader.join();
  if (torn) {
    std::ostringstream os;
    os << "query observed torn write: v1=" << torn_a << " v2=" << torn_b;
    return {false, os.str()};
  }
  return {true, std::to_string(iterations) + " write rounds, no torn read"};
}

// Unconditional concurrent increments act like atomic counters, and with
// history enabled the log is a strict sequence containing every write.
inline PropResult linearizable_increments(int threads, int per_thread) {
  using namespace troupe;
  using namespace troupe::kv;
  RealClock clock;
  StoreConfig cfg;
  cfg.record_history = true;
  Store store(clock, cfg);
  store.create_table({"t", "k", std::nullopt, {}});

  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = 0; i < per_thread; ++i) {
        store.write(Update{"t", Key{std::string("c"), std::nullopt}, {}, {}, {{"n", 1}}, {}});
      }
    });
  }
  for (auto& th : pool) th.join();

  auto item = store.get("t", Key{std::string("c"), std::nullopt});
  int64_t expect = int64_t{1} * threads * per_thread;
  if (!item || std::get<int64_t>(item->attrs.at("n")) != expect) {
    return {false, "counter lost increments"};
  }
  auto hist = store.history();
  if (hist.size() != static_cast<size_t>(expect)) {
    return {false, "history length does not match write count"};
  }
  int64_t last_value = 0;
  for (size_t i = 0; i < hist.size(); ++i) {
    if (hist[i].seq != i + 1) return {false, "history sequence has gaps"};
    int64_t v = std::get<int64_t>(hist[i].ops.at(0).attrs_after.at("n"));
    if (v != last_value + 1) {
      return {false, "history values are not a strict increment chain"};
    }
    last_value = v;
  }
  return {true, std::to_string(expect) + " increments linearized"};
}

// Randomized single-threaded workload: after every step the index answers
// exactly what a full scan filtered by the indexed attribute answers.
inline PropResult index_matches_scan(uint64_t seed, int ops) {
  using namespace troupe;
  using namespace troupe::kv;
  RealClock clock;
  Store store(clock);
  store.create_table({"t", "p", std::optional<std::string>("s"), {{"by_g", "g"}}});

  std::mt19937_64 rng(seed);
  auto pick = [&](int n) { return static_cast<int>(rng() % n); };
  const std::vector<std::string> groups = {"red", "green", "blue"};

  for (int i = 0; i < ops; ++i) {
    std::string p = "p" + std::to_string(pick(4));
    std::string s = "s" + std::to_string(pick(6));
    int what = pick(3);
    if (what == 0) {
      Item it;
      it.attrs["p"] = p;
      it.attrs["s"] = s;
      if (pick(4) != 0) it.attrs["g"] = groups[pick(3)];
      store.write(Put{"t", it, {}});
    } else if (what == 1) {
      Update u{"t", Key{p, s}, {}, {}, {}, {}};
      if (pick(2) == 0) {
        u.set["g"] = groups[pick(3)];
      } else {
        u.increment["n"] = 1;
      }
      store.write(u);
    } else {
      store.write(Delete{"t", Key{p, s}, {}});
    }

    if (i % 97 != 0) continue;
    auto all = store.scan("t");
    for (const auto& g : groups) {
      std::set<std::pair<std::string, std::string>> expect;
      for (const auto& it : all) {
        auto a = it.attrs.find("g");
        if (a != it.attrs.end() && std::holds_alternative<std::string>(a->second) &&
            std::get<std::string>(a->second) == g) {
          expect.insert({std::get<std::string>(it.attrs.at("p")),
                         std::get<std::string>(it.attrs.at("s"))});
        }
      }
      auto got_items = store.query(QuerySpec{"t", std::optional<std::string>("by_g"), g, std::nullopt, true, std::nullopt});
      std::set<std::pair<std::string, std::string>> got;
      for (const auto& it : got_items) {
        got.insert({std::get<std::string>(it.attrs.at("p")),
                    std::get<std::string>(it.attrs.at("s"))});
      }
      if (got != expect) {
        std::ostringstream os;
        os << "index by_g diverged from scan at op " << i << " for value " << g
           << " (" << got.size() << " vs " << expect.size() << " items)";
        return {false, os.str()};
      }
    }
  }
  return {true, std::to_string(ops) + " randomized ops, index matched scan"};
}

// Concurrent conditional transactions must be serializable: some ordering of
// the committed transactions replays every condition as satisfied and lands
// on the observed final state.
inline PropResult serializable_commits(uint64_t seed, int txns, int threads) {
  using namespace troupe;
  using namespace troupe::kv;
  RealClock clock;
  Store store(clock);
  store.create_table({"t", "k", std::nullopt, {}});
  const std::vector<std::string> keys = {"a", "b", "c"};
  for (const auto& k : keys) {
    store.write(Put{"t", Item{{{"k", k}, {"v", int64_t{0}}}}, {}});
  }

  struct Txn {
    // apply: key index -> delta, guard: optional (key index, expected value)
    std::map<int, int64_t> deltas;
    int guard_key = -1;
    int64_t guard_value = 0;
    bool committed = false;
  };
  std::vector<Txn> plan(txns);
  std::mt19937_64 rng(seed);
  for (auto& t : plan) {
    int n = 1 + static_cast<int>(rng() % 2);
    for (int i = 0; i < n; ++i) {
      t.deltas[static_cast<int>(rng() % keys.size())] += 1 + static_cast<int>(rng() % 3);
    }
    if (rng() % 2 == 0) {
      t.guard_key = static_cast<int>(rng() % keys.size());
      t.guard_value = static_cast<int>(rng() % 4);
    }
  }

  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= txns) return;
        auto& t = plan[i];
        std::vector<WriteAction> actions;
        if (t.guard_key >= 0 && !t.deltas.count(t.guard_key)) {
          actions.push_back(ConditionCheck{
              "t", Key{keys[t.guard_key], std::nullopt},
              Condition::equals("v", t.guard_value)});
        }
        for (const auto& [ki, d] : t.deltas) {
          std::optional<Condition> cond;
          if (ki == t.guard_key) cond = Condition::equals("v", t.guard_value);
          actions.push_back(Update{"t", Key{keys[ki], std::nullopt}, {}, {}, {{"v", d}}, cond});
        }
        auto r = store.transact_write(actions);
        t.committed = r.ok();
      }
    });
  }
  for (auto& th : pool) th.join();

  std::map<int, int64_t> final_state;
  for (size_t ki = 0; ki < keys.size(); ++ki) {
    auto item = store.get("t", Key{keys[ki], std::nullopt});
    final_state[static_cast<int>(ki)] = std::get<int64_t>(item->attrs.at("v"));
  }

  std::vector<int> committed;
  for (int i = 0; i < txns; ++i) {
    if (plan[i].committed) committed.push_back(i);
  }
  std::sort(committed.begin(), committed.end());
  do {
    std::map<int, int64_t> state;
    for (size_t ki = 0; ki < keys.size(); ++ki) state[static_cast<int>(ki)] = 0;
    bool valid = true;
    for (int i : committed) {
      const auto& t = plan[i];
      if (t.guard_key >= 0 && state[t.guard_key] != t.guard_value) {
        valid = false;
        break;
      }
      for (const auto& [ki, d] : t.deltas) state[ki] += d;
    }
    if (valid && state == final_state) {
      std::ostringstream os;
      os << committed.size() << " of " << txns << " committed, order explained";
      return {true, os.str()};
    }
  } while (std::next_permutation(committed.begin(), committed.end()));
  return {false, "no serialization order explains the final state"};
}

}  // namespace kvprops
