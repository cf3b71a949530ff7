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

#include <map>
#include <memory>

#include "troupe/harness/client.hpp"
#include "troupe/harness/scenarios.hpp"
#include "troupe/model/records.hpp"

namespace troupe::harness {
namespace {

struct ProbeSummary {
  int64_t violations = 0;
  std::map<std::string, int64_t> next_seq;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ProbeSummary, violations,
                                                next_seq)

// Validates per-sender sequence numbers as they are consumed; any skip,
// repeat, or reordering bumps the violation counter permanently.
struct ProbeActor : api::ActorBehavior {
  ProbeSummary tally;

  api::MessageSender sender;

  void receive(const api::Message& msg) override {
    if (msg.type_tag() == "Seq") {
      const auto m = msg.as<SeqMsg>();
      auto& next = tally.next_seq[m.sender];
      if (m.seq != next) tally.violations += 1;
      next = m.seq + 1;
    } else if (msg.type_tag() == "ProbeQuery") {
      sender.tell_external(msg.as<ProbeQuery>().correlation, tally);
    }
  }
};

void to_json(api::Json& j, const ProbeActor& a) { j = api::Json(a.tally); }
void from_json(const api::Json& j, ProbeActor& a) {
  a.tally = j.get<ProbeSummary>();
}

}  // namespace

api::Registry fifo_registry() {
  api::Registry r;
  r.register_message<SeqMsg>("Seq");
  r.register_message<ProbeQuery>("ProbeQuery");
  r.register_message<ProbeSummary>("ProbeSummary");
  r.register_actor<ProbeActor>("Probe").sender(&ProbeActor::sender);
  return r;
}

model::ActorId fifo_probe_id() { return {"Probe", "s-0", "probe"}; }

void seed_fifo(kv::Store& store) {
  model::ActorStateRecord rec{fifo_probe_id(), "Probe",
                              api::Json(ProbeSummary{}).dump()};
  store.write(kv::Put{model::kActorStateTable, model::to_item(rec), {}});
}

ScenarioResult run_fifo(const ScenarioConfig& cfg) {
  ScenarioHarness h(cfg, fifo_registry());
  seed_fifo(h.store());
  h.start_workers();

  std::vector<std::unique_ptr<Client>> clients;
  for (int i = 0; i < cfg.senders; ++i) {
    clients.push_back(std::make_unique<Client>(
        h.clock(), h.store(), "fifo-" + std::to_string(i), cfg.seed + i));
  }

  // Interleaved round robin: sender i emits seq 0,1,2,... in order.
  const int total = cfg.senders * cfg.requests;
  h.run_timeline(total, [&](int j) {
    const int s = j % cfg.senders;
    const int64_t seq = j / cfg.senders;
    clients[s]->send(fifo_probe_id(), "Seq",
                     api::Registry::encode(
                         SeqMsg{"c-" + std::to_string(s), seq}));
  });

  OracleReport checks;
  if (!h.await(
          [&] {
            return h.store().scan(model::kActorInboxTable).empty() &&
                   h.all_idle();
          },
          cfg.run_timeout_us)) {
    checks.fail("timed out draining the probe inbox");
  }

  std::vector<LatencySample> samples(1);
  samples[0].correlation_id = "probe-summary";
  samples[0].sent_us = h.clock().now_us();
  Client asker(h.clock(), h.store(), "asker", cfg.seed ^ 0xabcdef);
  asker.send(fifo_probe_id(), "ProbeQuery",
             api::Registry::encode(ProbeQuery{samples[0].correlation_id}));
  std::optional<model::OutboxRecord> reply;
  h.await(
      [&] {
        reply = asker.poll_response(samples[0].correlation_id);
        return reply.has_value();
      },
      cfg.run_timeout_us);
  if (!reply) {
    checks.fail("probe summary never arrived");
  } else {
    samples[0].replied_us = reply->timestamp * 1000;
    const auto summary = api::Json::parse(reply->content).get<ProbeSummary>();
    if (summary.violations != 0) {
      checks.fail("probe saw " + std::to_string(summary.violations) +
                  " order violations");
    }
    for (int i = 0; i < cfg.senders; ++i) {
      const std::string name = "c-" + std::to_string(i);
      const auto it = summary.next_seq.find(name);
      const int64_t got = it == summary.next_seq.end() ? 0 : it->second;
      if (got != cfg.requests) {
        checks.fail("sender " + name + " delivered " + std::to_string(got) +
                    " of " + std::to_string(cfg.requests));
      }
    }
  }
  if (cfg.quiesce_at_end && !h.await_quiescence(cfg.run_timeout_us)) {
    checks.fail("system did not quiesce");
  }
  h.stop_workers();
  return h.finish(samples, std::move(checks));
}

}  // namespace troupe::harness
