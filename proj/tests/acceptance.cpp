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
// Acceptance gate: eight end-to-end criteria over the whole runtime, each
// with tolerances pinned in code. Prints one verdict line per criterion and
// exits 0 only when every criterion passes. An optional argv[1] (e.g. "C3")
// restricts the run to a single criterion.

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "kv_props.hpp"
#include "sealing_cases.hpp"
#include "troupe/harness/client.hpp"
#include "troupe/harness/scenarios.hpp"
#include "troupe/model/records.hpp"
#include "troupe/runtime/events.hpp"
#include "troupe/runtime/worker.hpp"

using namespace troupe;
using namespace troupe::harness;

namespace {

int g_passed = 0;
int g_failed = 0;

void record(const char* id, const std::string& title, bool pass,
            const std::string& detail) {
  std::printf("[%s] %s %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
              detail.c_str());
  std::fflush(stdout);
  (pass ? g_passed : g_failed) += 1;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

bool await_on(Clock& clock, const std::function<bool()>& pred,
              int64_t timeout_us) {
  const int64_t deadline = clock.now_us() + timeout_us;
  while (!pred()) {
    if (clock.now_us() >= deadline) return pred();
    clock.sleep_for_us(2000);
  }
  return true;
}

// ------------------------------------------------------------------- C1

// Pinned: banking with 600 transfers over 300 accounts in 8 banks, 4
// workers, 5 worker kills at seeded times with respawns, 2% transient store
// failures. 20 seeds; each must conserve money, answer every correlation
// exactly once, consume every envelope exactly once, keep per-channel FIFO,
// and reach quiescence within the simulated-time budget.
void criterion_c1() {
  const int kSeeds = 20;
  int clean = 0;
  std::string first_failure;
  for (int i = 0; i < kSeeds; ++i) {
    const uint64_t seed = 1000 + static_cast<uint64_t>(i);
    ScenarioConfig cfg;
    cfg.scenario = "banking";
    cfg.workers = 4;
    cfg.requests = 600;
    cfg.banks = 8;
    cfg.accounts = 300;
    cfg.seed = seed;
    cfg.store_transient_p = 0.02;
    cfg.inject_spacing_us = 5000;
    cfg.run_timeout_us = 60'000'000;  // one minute to reply, one to quiesce
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 5; ++k) {
      cfg.chaos.kill_at_ms.push_back(400 +
                                     static_cast<int64_t>(rng() % 2600));
    }
    cfg.chaos.respawn_delay_ms = 800;
    const auto r = run_banking(cfg);
    if (r.ok) {
      clean += 1;
    } else if (first_failure.empty()) {
      first_failure =
          "seed " + std::to_string(seed) + ": " + r.failures.front();
    }
  }
  record("C1", "exactly-once banking under worker kills and transients",
         clean == kSeeds,
         clean == kSeeds
             ? "20/20 seeds conserve balances, reply once per request, "
               "consume each envelope once, and quiesce"
             : std::to_string(clean) + "/20 seeds clean; first failure: " +
                   first_failure);
}

// ------------------------------------------------------------------- C2

// Pinned: every interleaving of sender commits against the passivation steps
// (before sealing, before the emptiness check, before the delete, after the
// delete), with one and with two sends per point, fault-free and under 25%
// transient storage faults. Zero tolerance: no lost envelope, no stranded
// inbox, wrong outcomes fail.
void criterion_c2() {
  const auto clean = sealing_cases::run_all_interleavings(0.0, 4000);
  const auto faulted = sealing_cases::run_all_interleavings(0.25, 6000);
  const bool pass = clean.cases == 32 && faulted.cases == 32 &&
                    clean.violations == 0 && faulted.violations == 0;
  std::string detail;
  if (pass) {
    detail = "64 interleaved passivations (32 fault-free, 32 at 25% "
             "transients): no stranded or lost envelope, outcomes exact";
  } else {
    detail = std::to_string(clean.violations + faulted.violations) +
             " violations in " +
             std::to_string(clean.cases + faulted.cases) + " cases";
    if (!clean.notes.empty()) detail += "; " + clean.notes.front();
    else if (!faulted.notes.empty()) detail += "; " + faulted.notes.front();
  }
  record("C2", "sealing protocol vs concurrent senders", pass, detail);
}

// ------------------------------------------------------------------- C3

// Pinned: with processing cost and storage latency at zero, a message
// injected uniformly into a polling interval waits half an interval on
// average. Single hop (banking transfer): mean in [p/2, p/2 + p/10]. Two
// hops (hotel booking, user -> hotel -> user): mean reply-after-first-commit
// within 15% of p, for p in {100, 500, 1000} ms.
struct HopMeasurement {
  bool ok = false;
  double mean_us = 0;
  std::string error;
};

runtime::WorkerConfig latency_worker_config(int64_t p_ms) {
  runtime::WorkerConfig wc;
  wc.worker_id = "w0";
  wc.polling_interval_ms = p_ms;
  wc.processing_slots = 1;
  wc.park_after_idle_ms = 1'000'000'000;
  wc.parking_threshold_ms = 1'000'000'000;
  wc.lease_duration_ms = 1'000'000'000;
  wc.heartbeat_interval_ms = 10'000'000;
  wc.seed = 2;
  return wc;
}

HopMeasurement measure_single_hop(int64_t p_ms) {
  HopMeasurement m;
  VirtualClock clock(0);
  ClockThreadGuard guard(clock);
  kv::Store store(clock);
  auto registry = banking_registry();
  for (const auto& schema :
       model::runtime_schemas(registry.collection_decls())) {
    store.create_table(schema);
  }
  seed_banking(store, 1, 8, 1'000'000);
  runtime::Worker w(clock, store, registry, latency_worker_config(p_ms),
                    nullptr);
  w.start();
  Client client(clock, store, "lat", 5);
  const auto bank = bank_actor_id(0);
  const auto outbox_has = [&](const std::string& corr) {
    return store.get(model::kOutboxTable, kv::Key{corr, std::nullopt})
        .has_value();
  };

  client.send(bank, "Transfer",
              api::Registry::encode(TransferMsg{
                  account_name(0), account_name(1), 1, "warm"}));
  const int64_t p_us = p_ms * 1000;
  if (!await_on(clock, [&] { return outbox_has("warm"); }, 30 * p_us)) {
    m.error = "warm-up transfer never answered";
    w.kill();
    w.join();
    return m;
  }

  // The shard now polls at its aligned ticks. Inject on a uniform grid of
  // offsets inside each interval, nudged 2ms early so millisecond rounding
  // of the reply timestamp cannot push the mean under the exact p/2 floor.
  const int64_t phase = runtime::Worker::poll_phase_us(bank.shard(), p_us);
  const int kTicks = 25;
  const int kPerTick = 8;
  int64_t first_tick = phase;
  while (first_tick <= clock.now_us() + p_us) first_tick += p_us;
  std::vector<int64_t> sent(kTicks * kPerTick);
  int n = 0;
  for (int k = 0; k < kTicks; ++k) {
    const int64_t tick = first_tick + static_cast<int64_t>(k) * p_us;
    for (int j = 0; j < kPerTick; ++j) {
      const int64_t offset =
          (static_cast<int64_t>(2 * j + 1) * p_us) / (2 * kPerTick) - 2000;
      clock.sleep_until(tick + offset);
      sent[n] = clock.now_us();
      client.send(bank, "Transfer",
                  api::Registry::encode(
                      TransferMsg{account_name(2), account_name(3), 1,
                                  "s-" + std::to_string(n)}));
      n += 1;
    }
  }
  if (!await_on(clock,
                [&] { return outbox_has("s-" + std::to_string(n - 1)); },
                30 * p_us)) {
    m.error = "sampled transfers never drained";
    w.kill();
    w.join();
    return m;
  }
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const auto item = store.get(model::kOutboxTable,
                                kv::Key{"s-" + std::to_string(i), std::nullopt});
    if (!item) {
      m.error = "missing reply s-" + std::to_string(i);
      w.kill();
      w.join();
      return m;
    }
    total += static_cast<double>(
        model::outbox_from_item(*item).timestamp * 1000 - sent[i]);
  }
  m.mean_us = total / n;
  m.ok = true;
  w.request_stop();
  w.join();
  return m;
}

HopMeasurement measure_two_hop(int64_t p_ms) {
  HopMeasurement m;
  VirtualClock clock(0);
  ClockThreadGuard guard(clock);
  kv::Store store(clock);
  auto registry = hotel_registry();
  for (const auto& schema :
       model::runtime_schemas(registry.collection_decls())) {
    store.create_table(schema);
  }
  seed_hotel(store, 10, 20, 10, 3);
  runtime::EventLog events;
  runtime::Worker w(clock, store, registry, latency_worker_config(p_ms),
                    &events);

  const int64_t p_us = p_ms * 1000;
  const auto user = user_actor_id(0);
  const int64_t user_phase = runtime::Worker::poll_phase_us(user.shard(), p_us);
  // Pick the hotel whose poll phase sits farthest from the user's so the
  // two hops never race the same instant.
  int best_hotel = 0;
  int64_t best_gap = -1;
  for (int k = 0; k < 10; ++k) {
    const int64_t hp =
        runtime::Worker::poll_phase_us(hotel_actor_id(k).shard(), p_us);
    const int64_t g1 = ((hp - user_phase) % p_us + p_us) % p_us;
    const int64_t g2 = p_us - g1;
    const int64_t worst = g1 < g2 ? g1 : g2;
    if (worst > best_gap) {
      best_gap = worst;
      best_hotel = k;
    }
  }
  const auto hotel = hotel_actor_id(best_hotel);
  if (best_gap < 3000) {
    m.error = "no hotel shard with a usable phase gap";
    return m;
  }

  w.start();
  Client client(clock, store, "guest", 6);
  const auto outbox = [&](const std::string& corr) {
    return store.get(model::kOutboxTable, kv::Key{corr, std::nullopt});
  };
  client.send(user, "BookRequest",
              api::Registry::encode(BookRequest{
                  hotel.canonical(), kRoomTypes[0], 0, "warm"}));
  if (!await_on(clock, [&] { return outbox("warm").has_value(); },
                40 * p_us)) {
    m.error = "warm-up booking never answered";
    w.kill();
    w.join();
    return m;
  }

  const int kSamples = 100;
  std::vector<std::string> uids(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    clock.sleep_for_us(p_us / 3 + 137);
    uids[i] = client.send(
        user, "BookRequest",
        api::Registry::encode(BookRequest{hotel.canonical(),
                                          kRoomTypes[i % kRoomTypeCount],
                                          i % 10, "h-" + std::to_string(i)}));
  }
  if (!await_on(
          clock,
          [&] {
            return outbox("h-" + std::to_string(kSamples - 1)).has_value();
          },
          40 * p_us)) {
    m.error = "sampled bookings never drained";
    w.kill();
    w.join();
    return m;
  }

  double total = 0;
  for (int i = 0; i < kSamples; ++i) {
    const auto reply = outbox("h-" + std::to_string(i));
    if (!reply) {
      m.error = "missing reply h-" + std::to_string(i);
      w.kill();
      w.join();
      return m;
    }
    const auto committed = events.select([&](const runtime::Event& e) {
      return e.kind == runtime::EventKind::MessageCommitted &&
             e.detail == uids[i];
    });
    if (committed.size() != 1) {
      m.error = "expected one commit of sample " + std::to_string(i) +
                ", saw " + std::to_string(committed.size());
      w.kill();
      w.join();
      return m;
    }
    total += static_cast<double>(
        model::outbox_from_item(*reply).timestamp * 1000 -
        committed.front().time_us);
  }
  m.mean_us = total / kSamples;
  m.ok = true;
  w.request_stop();
  w.join();
  return m;
}

void criterion_c3() {
  bool pass = true;
  std::string detail;
  for (int64_t p_ms : {100, 500, 1000}) {
    const double p_us = static_cast<double>(p_ms) * 1000;
    const auto one = measure_single_hop(p_ms);
    if (!one.ok) {
      pass = false;
      detail += "p=" + std::to_string(p_ms) + "ms single-hop: " + one.error +
                "; ";
      continue;
    }
    const bool one_ok = one.mean_us >= p_us / 2 &&
                        one.mean_us <= p_us / 2 + p_us / 10;
    const auto two = measure_two_hop(p_ms);
    if (!two.ok) {
      pass = false;
      detail += "p=" + std::to_string(p_ms) + "ms two-hop: " + two.error +
                "; ";
      continue;
    }
    const bool two_ok =
        two.mean_us >= 0.85 * p_us && two.mean_us <= 1.15 * p_us;
    if (!one_ok || !two_ok) pass = false;
    detail += "p=" + std::to_string(p_ms) +
              "ms: 1-hop " + fmt(one.mean_us / 1000) + "ms" +
              (one_ok ? "" : " OUT OF [p/2, p/2+p/10]") + ", 2-hop " +
              fmt(two.mean_us / 1000) + "ms" +
              (two_ok ? "" : " OUT OF p +/- 15%") + "; ";
  }
  record("C3", "polling latency model on the simulated clock", pass, detail);
}

// ------------------------------------------------------------------- C4

// Pinned: banking with 8 single-shard banks, 2ms simulated storage latency
// per operation, one processing slot per worker, claim caps partitioning the
// shards. Doubling 1 -> 2 workers must scale throughput by >= 1.5x and
// 2 -> 4 by >= 1.3x, all on simulated time.
void criterion_c4() {
  double tp[3] = {0, 0, 0};
  bool all_ok = true;
  std::string errors;
  const int worker_counts[3] = {1, 2, 4};
  for (int i = 0; i < 3; ++i) {
    ScenarioConfig cfg;
    cfg.scenario = "banking";
    cfg.workers = worker_counts[i];
    cfg.requests = 400;
    cfg.banks = 8;
    cfg.accounts = 300;
    cfg.seed = 77;
    cfg.inject_spacing_us = 0;
    cfg.quiesce_at_end = false;
    cfg.store_latency_min_us = 2000;
    cfg.store_latency_max_us = 2000;
    cfg.worker.processing_slots = 1;
    cfg.worker.max_active_shards = (8 + cfg.workers - 1) / cfg.workers;
    cfg.worker.park_after_idle_ms = 1'000'000'000;
    cfg.worker.parking_threshold_ms = 1'000'000'000;
    const auto r = run_banking(cfg);
    if (!r.ok) {
      all_ok = false;
      errors += std::to_string(cfg.workers) + "w: " + r.failures.front() +
                "; ";
    }
    tp[i] = r.throughput_per_s;
  }
  const double r21 = tp[0] > 0 ? tp[1] / tp[0] : 0;
  const double r42 = tp[1] > 0 ? tp[2] / tp[1] : 0;
  const bool pass = all_ok && r21 >= 1.5 && r42 >= 1.3;
  record("C4", "strong scaling across the worker fleet", pass,
         errors + fmt(tp[0]) + " / " + fmt(tp[1]) + " / " + fmt(tp[2]) +
             " req/s for 1/2/4 workers; 2w/1w " + fmt(r21) +
             "x (>= 1.5), 4w/2w " + fmt(r42) + "x (>= 1.3)");
}

// ------------------------------------------------------------------- C5

// Pinned: storage property suites. 10^4 conditional-update trials with one
// winner each, atomic visibility of multi-item transactions, per-key
// linearizable increments, index results equal to scan-side filtering, and
// serializable concurrent commits across three seeds.
void criterion_c5() {
  struct Named {
    const char* name;
    kvprops::PropResult r;
  };
  std::vector<Named> runs;
  runs.push_back({"cas-single-winner", kvprops::cas_single_winner(4, 2500)});
  runs.push_back({"atomic-visibility", kvprops::atomic_visibility(1500)});
  runs.push_back(
      {"linearizable-increments", kvprops::linearizable_increments(4, 300)});
  runs.push_back({"index-vs-scan", kvprops::index_matches_scan(42, 1500)});
  for (uint64_t seed : {11ull, 12ull, 13ull}) {
    runs.push_back(
        {"serializable-commits", kvprops::serializable_commits(seed, 6, 3)});
  }
  bool pass = true;
  std::string detail;
  for (const auto& run : runs) {
    if (!run.r.ok) {
      pass = false;
      detail += std::string(run.name) + ": " + run.r.detail + "; ";
    }
  }
  if (pass) {
    detail = "10^4 CAS trials single-winner, atomic visibility, "
             "linearizable counters, index = scan, serializable commits";
  }
  record("C5", "storage engine property suites", pass, detail);
}

// ------------------------------------------------------------------- C6

// Pinned: 10 senders stream 100 messages each at one probe actor, 50 seeds.
// The probe must observe every per-sender sequence gapless and in order, and
// the committed history must show per-channel FIFO appends and consumption.
void criterion_c6() {
  const int kSeeds = 50;
  int clean = 0;
  std::string first_failure;
  for (int i = 0; i < kSeeds; ++i) {
    ScenarioConfig cfg;
    cfg.scenario = "fifo";
    cfg.workers = 2;
    cfg.senders = 10;
    cfg.requests = 100;
    cfg.seed = 500 + static_cast<uint64_t>(i);
    cfg.inject_spacing_us = 500;
    cfg.quiesce_at_end = false;
    const auto r = run_fifo(cfg);
    if (r.ok) {
      clean += 1;
    } else if (first_failure.empty()) {
      first_failure = "seed " + std::to_string(cfg.seed) + ": " +
                      r.failures.front();
    }
  }
  record("C6", "per-channel FIFO delivery", clean == kSeeds,
         clean == kSeeds
             ? "50/50 seeds: 10x100 messages in order, history FIFO per "
               "channel"
             : std::to_string(clean) + "/50 seeds clean; first failure: " +
                   first_failure);
}

// ------------------------------------------------------------------- C7

// Pinned: zombie workers (4s freezes spanning the 2s lease) under light
// faults. With ownership fencing on, 5 control seeds must stay correct.
// With fencing disabled through the test hook, at least 1 of 20 seeds must
// corrupt the run and be caught by the oracles; fencing is load-bearing.
ScenarioConfig c7_config(uint64_t seed, bool disable_fencing) {
  ScenarioConfig cfg;
  cfg.scenario = "banking";
  cfg.workers = 4;
  cfg.requests = 300;
  cfg.banks = 8;
  cfg.accounts = 100;
  cfg.seed = seed;
  cfg.inject_spacing_us = 5000;
  cfg.store_transient_p = 0.01;
  cfg.store_latency_min_us = 200;
  cfg.store_latency_max_us = 800;
  cfg.chaos.stalls = {{800, 4000}, {1400, 4000}, {2000, 4000}};
  cfg.disable_fencing = disable_fencing;
  return cfg;
}

void criterion_c7() {
  int control_clean = 0;
  std::string control_failure;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = run_banking(c7_config(seed, false));
    if (r.ok) {
      control_clean += 1;
    } else if (control_failure.empty()) {
      control_failure = "fenced seed " + std::to_string(seed) + ": " +
                        r.failures.front();
    }
  }
  int mutated_caught = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = run_banking(c7_config(seed, true));
    if (!r.ok) mutated_caught += 1;
  }
  const bool pass = control_clean == 5 && mutated_caught >= 1;
  std::string detail;
  if (control_clean != 5) detail += control_failure + "; ";
  detail += "fenced 5/5 seeds clean; fencing disabled corrupted " +
            std::to_string(mutated_caught) +
            "/20 seeds (>= 1 required), caught by the history oracles";
  record("C7", "ownership fencing is load-bearing under zombie workers",
         pass, detail);
}

// ------------------------------------------------------------------- C8

// Pinned: a message whose handler always throws is attempted exactly
// max_message_retries (5) times, then dead-lettered with its attempt count
// and reason, after which the shard keeps processing new traffic.
struct BoomMsg {
  int64_t x = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BoomMsg, x)

struct PingMsg {
  int64_t x = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PingMsg, x)

struct FragileActor : api::ActorBehavior {
  int64_t handled = 0;
  void receive(const api::Message& msg) override {
    if (msg.type_tag() == "Boom") throw std::runtime_error("poison payload");
    handled += 1;
  }
};

void to_json(api::Json& j, const FragileActor& a) {
  j = api::Json{{"handled", a.handled}};
}
void from_json(const api::Json& j, FragileActor& a) {
  a.handled = j.value("handled", int64_t{0});
}

void criterion_c8() {
  VirtualClock clock(0);
  ClockThreadGuard guard(clock);
  kv::Store store(clock);
  api::Registry registry;
  registry.register_message<BoomMsg>("Boom");
  registry.register_message<PingMsg>("Ping");
  registry.register_actor<FragileActor>("Fragile");
  for (const auto& schema :
       model::runtime_schemas(registry.collection_decls())) {
    store.create_table(schema);
  }
  const model::ActorId victim{"P", "s-0", "victim"};
  model::ActorStateRecord state{victim, "Fragile",
                                api::Json{{"handled", 0}}.dump()};
  store.write(kv::Put{model::kActorStateTable, model::to_item(state), {}});

  runtime::WorkerConfig wc;
  wc.worker_id = "w0";
  wc.polling_interval_ms = 100;
  wc.processing_slots = 1;
  wc.max_message_retries = 5;
  wc.park_after_idle_ms = 1'000'000'000;
  wc.parking_threshold_ms = 1'000'000'000;
  wc.seed = 3;
  runtime::EventLog events;
  runtime::Worker w(clock, store, registry, wc, &events);
  w.start();

  Client client(clock, store, "ops", 9);
  client.send(victim, "Boom", api::Registry::encode(BoomMsg{1}));
  client.send(victim, "Ping", api::Registry::encode(PingMsg{2}));

  bool pass = true;
  std::string detail;
  const auto handled_count = [&]() -> int64_t {
    const auto item = store.get(model::kActorStateTable,
                                kv::Key{victim.canonical(), std::nullopt});
    if (!item) return -1;
    return api::Json::parse(model::state_from_item(*item).state)
        .value("handled", int64_t{0});
  };
  if (!await_on(clock,
                [&] {
                  return store.scan(model::kDeadLetterTable).size() == 1 &&
                         handled_count() == 1;
                },
                60'000'000)) {
    pass = false;
    detail = "poison message never dead-lettered or follow-up never ran";
  } else {
    const auto dead = store.scan(model::kDeadLetterTable);
    const auto rec = model::dead_letter_from_item(dead.front());
    const auto retries = events.count(runtime::EventKind::MessageRetried);
    if (rec.attempts != 5) {
      pass = false;
      detail = "dead letter records " + std::to_string(rec.attempts) +
               " attempts, expected exactly 5";
    } else if (rec.envelope.type_tag != "Boom") {
      pass = false;
      detail = "wrong envelope dead-lettered: " + rec.envelope.type_tag;
    } else if (rec.reason.rfind("handler", 0) != 0) {
      pass = false;
      detail = "unexpected dead-letter reason: " + rec.reason;
    } else if (retries != 4) {
      pass = false;
      detail = std::to_string(retries) + " retry events, expected 4";
    } else if (!store.scan(model::kActorInboxTable).empty()) {
      pass = false;
      detail = "inbox not drained after the dead letter";
    } else {
      detail = "poison message attempted exactly 5 times then "
               "dead-lettered with reason \"" +
               rec.reason.substr(0, 24) + "...\"; next message processed";
    }
  }
  w.request_stop();
  w.join();
  record("C8", "poison messages dead-letter and the shard stays live", pass,
         detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  struct Entry {
    const char* id;
    void (*fn)();
  };
  const Entry entries[] = {
      {"C1", criterion_c1}, {"C2", criterion_c2}, {"C3", criterion_c3},
      {"C4", criterion_c4}, {"C5", criterion_c5}, {"C6", criterion_c6},
      {"C7", criterion_c7}, {"C8", criterion_c8},
  };
  for (const auto& e : entries) {
    if (!only.empty() && only != e.id) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      e.fn();
    } catch (const std::exception& ex) {
      record(e.id, "criterion crashed", false, ex.what());
    }
    const auto dt = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    std::printf("       %s wall time: %" PRId64 " ms\n", e.id,
                static_cast<int64_t>(dt));
    std::fflush(stdout);
  }
  std::printf("\n%d passed, %d failed\n", g_passed, g_failed);
  return g_failed == 0 ? 0 : 1;
}
