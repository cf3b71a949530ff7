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

#include <memory>
#include <stdexcept>
#include <string>

#include "troupe/harness/client.hpp"
#include "troupe/harness/scenarios.hpp"
#include "troupe/model/records.hpp"

namespace troupe::harness {
namespace {

int account_index(const std::string& name) {
  auto pos = name.rfind('-');
  if (pos == std::string::npos) {
    throw std::invalid_argument("bad account name: " + name);
  }
  return std::stoi(name.substr(pos + 1));
}

struct BankActor : api::ActorBehavior {
  int64_t banks = 0;

  api::MessageSender sender;
  api::Collection<AccountItem> accounts;

  int my_index() const { return account_index(self().instance_id); }

  void receive(const api::Message& msg) override {
    if (msg.type_tag() == "Transfer") {
      on_transfer(msg.as<TransferMsg>());
    } else if (msg.type_tag() == "Deposit") {
      on_deposit(msg.as<DepositMsg>());
    }
  }

  void on_transfer(const TransferMsg& t) {
    if (!accounts.contains(t.from)) {
      sender.tell_external(t.correlation, BankReply{"unknown_account"});
      return;
    }
    auto& from = accounts.get(t.from);
    if (t.amount <= 0 || from.balance < t.amount) {
      sender.tell_external(t.correlation, BankReply{"rejected"});
      return;
    }
    const int to_bank =
        bank_of_account(account_index(t.to), static_cast<int>(banks));
    if (to_bank == my_index()) {
      if (!accounts.contains(t.to)) {
        sender.tell_external(t.correlation, BankReply{"unknown_account"});
        return;
      }
      from.balance -= t.amount;
      accounts.get(t.to).balance += t.amount;
      sender.tell_external(t.correlation, BankReply{"ok"});
    } else {
      // Debit here, credit at the owning bank; the deposit hop replies.
      from.balance -= t.amount;
      sender.tell(bank_actor_id(to_bank),
                  DepositMsg{t.to, t.amount, t.correlation});
    }
  }

  void on_deposit(const DepositMsg& d) {
    if (!accounts.contains(d.account)) {
      sender.tell_external(d.correlation, BankReply{"unknown_account"});
      return;
    }
    accounts.get(d.account).balance += d.amount;
    sender.tell_external(d.correlation, BankReply{"ok"});
  }
};

void to_json(api::Json& j, const BankActor& a) { j = api::Json{{"banks", a.banks}}; }
void from_json(const api::Json& j, BankActor& a) {
  a.banks = j.value("banks", int64_t{0});
}

}  // namespace

api::Registry banking_registry() {
  api::Registry r;
  r.register_message<TransferMsg>("Transfer");
  r.register_message<DepositMsg>("Deposit");
  r.register_message<BankReply>("BankReply");
  r.register_item<AccountItem>("Account", {});
  r.register_actor<BankActor>("Bank")
      .sender(&BankActor::sender)
      .collection(&BankActor::accounts, "Accounts");
  return r;
}

model::ActorId bank_actor_id(int bank_index) {
  const std::string k = std::to_string(bank_index);
  return {"Bank", "s-" + k, "bank-" + k};
}

std::string account_name(int idx) { return "acct-" + std::to_string(idx); }

int bank_of_account(int idx, int banks) { return idx % banks; }

void seed_banking(kv::Store& store, int banks, int accounts,
                  int64_t initial_balance) {
  for (int k = 0; k < banks; ++k) {
    BankActor proto;
    proto.banks = banks;
    api::Json state;
    to_json(state, proto);
    model::ActorStateRecord rec{bank_actor_id(k), "Bank", state.dump()};
    store.write(kv::Put{model::kActorStateTable, model::to_item(rec), {}});
  }
  for (int i = 0; i < accounts; ++i) {
    model::CollectionItemRecord item;
    item.collection_id = model::collection_id(
        bank_actor_id(bank_of_account(i, banks)), "Accounts");
    item.item_id = account_name(i);
    item.payload = api::Json(AccountItem{initial_balance}).dump();
    store.write(kv::Put{model::collection_table_name("Accounts"),
                        model::to_item(item),
                        {}});
  }
}

int64_t banking_total_balance(kv::Store& store) {
  int64_t total = 0;
  for (const auto& raw : store.scan(model::collection_table_name("Accounts"))) {
    const auto rec = model::collection_item_from_item(raw);
    total += api::Json::parse(rec.payload).get<AccountItem>().balance;
  }
  return total;
}

ScenarioResult run_banking(const ScenarioConfig& cfg) {
  ScenarioHarness h(cfg, banking_registry());
  seed_banking(h.store(), cfg.banks, cfg.accounts, cfg.initial_balance);
  h.start_workers();

  std::mt19937_64 rng(cfg.seed);
  std::vector<LatencySample> samples(cfg.requests);
  const int nclients = 4;
  std::vector<std::unique_ptr<Client>> clients;
  for (int i = 0; i < nclients; ++i) {
    clients.push_back(std::make_unique<Client>(
        h.clock(), h.store(), "load-" + std::to_string(i), cfg.seed + i));
  }

  h.run_timeline(cfg.requests, [&](int j) {
    const int from = static_cast<int>(rng() % cfg.accounts);
    int to = static_cast<int>(rng() % cfg.accounts);
    if (to == from) to = (to + 1) % cfg.accounts;
    int64_t amount = 1 + static_cast<int64_t>(rng() % 120);
    if (rng() % 40 == 0) amount = cfg.initial_balance * cfg.accounts;
    const std::string corr = "t-" + std::to_string(j);
    samples[j].correlation_id = corr;
    samples[j].sent_us = h.clock().now_us();
    clients[j % nclients]->send(
        bank_actor_id(bank_of_account(from, cfg.banks)), "Transfer",
        api::Registry::encode(
            TransferMsg{account_name(from), account_name(to), amount, corr}));
  });

  OracleReport checks;
  if (!h.await([&] { return h.outbox_size() >= samples.size(); },
               cfg.run_timeout_us)) {
    checks.fail("timed out waiting for replies");
  }
  if (cfg.quiesce_at_end && !h.await_quiescence(cfg.run_timeout_us)) {
    checks.fail("system did not quiesce");
  }
  h.stop_workers();

  for (auto& s : samples) {
    auto item = h.store().get(model::kOutboxTable,
                              kv::Key{s.correlation_id, std::nullopt});
    if (item) s.replied_us = model::outbox_from_item(*item).timestamp * 1000;
  }

  const int64_t total = banking_total_balance(h.store());
  const int64_t expected =
      static_cast<int64_t>(cfg.accounts) * cfg.initial_balance;
  if (total != expected) {
    checks.fail("balance sum " + std::to_string(total) + ", expected " +
                std::to_string(expected));
  }
  return h.finish(samples, std::move(checks));
}

}  // namespace troupe::harness
