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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "troupe/api/api.hpp"
#include "troupe/clock.hpp"

using namespace troupe;
using namespace troupe::api;
using troupe::model::ActorId;

namespace {

struct Wallet {
  int64_t coins = 0;
  std::string label;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Wallet, coins, label)

struct Op {
  std::string kind;
  std::string a;
  std::string b;
  int64_t n = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Op, kind, a, b, n)

struct Script {
  std::vector<Op> ops;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Script, ops)

struct OtherActor : ActorBehavior {
  Collection<Wallet> wallets;
  void receive(const Message&) override {}
  friend void to_json(Json& j, const OtherActor&) { j = Json::object(); }
  friend void from_json(const Json&, OtherActor&) {}
};

struct ScriptActor : ActorBehavior {
  // state
  int64_t total = 0;
  std::string log;
  // features
  MessageSender sender;
  ActorSpawner spawner;
  Collection<Wallet> wallets;

  void receive(const Message& msg) override {
    for (const auto& op : msg.as<Script>().ops) {
      if (op.kind == "inc") {
        total += op.n;
      } else if (op.kind == "get") {
        wallets.get(op.a).coins += op.n;
      } else if (op.kind == "contains") {
        log += wallets.contains(op.a) ? "y" : "n";
      } else if (op.kind == "put") {
        wallets.put(op.a, Wallet{op.n, op.b});
      } else if (op.kind == "del") {
        wallets.remove(op.a);
      } else if (op.kind == "find") {
        for (const auto& [id, w] : wallets.find(op.a, op.b)) {
          log += id + "=" + std::to_string(w.coins) + ";";
        }
      } else if (op.kind == "tell") {
        sender.tell(ActorId::parse(op.a), Op{"inc", "", "", op.n});
      } else if (op.kind == "ext") {
        sender.tell_external(op.a, Op{"reply", op.b, "", op.n});
      } else if (op.kind == "spawn") {
        ScriptActor proto;
        proto.total = op.n;
        auto id = spawner.spawn(proto, op.a, op.b);
        sender.tell(id, Op{"hello", "", "", 0});
        log += id.canonical() + ";";
      } else if (op.kind == "boom") {
        throw std::runtime_error("scripted failure");
      }
    }
  }
};

void to_json(Json& j, const ScriptActor& a) {
  j = Json{{"total", a.total}, {"log", a.log}};
}
void from_json(const Json& j, ScriptActor& a) {
  a.total = j.value("total", int64_t{0});
  a.log = j.value("log", std::string());
}

struct Fixture {
  RealClock clock;
  Registry registry;
  kv::Store store{clock};
  ActorId self{"P", "s-0", "actor-1"};

  Fixture() {
    registry.register_message<Script>("Script");
    registry.register_message<Op>("Op");
    registry.register_item<Wallet>("Wallet", {"label"},
                                   [](const Wallet& w) {
                                     return std::map<std::string, std::string>{
                                         {"label", w.label}};
                                   });
    registry.register_actor<ScriptActor>("ScriptActor")
        .sender(&ScriptActor::sender)
        .spawner(&ScriptActor::spawner)
        .collection(&ScriptActor::wallets, "Wallets");
    for (const auto& schema : model::runtime_schemas(registry.collection_decls())) {
      store.create_table(schema);
    }
  }

  Message script(std::vector<Op> ops) {
    return registry.decode_message("Script", Json(Script{std::move(ops)}).dump());
  }

  ActorInstance instance() {
    return ActorInstance::fresh(registry, self, "ScriptActor",
                                Json(ScriptActor{}).dump());
  }

  void seed_wallet(const std::string& item_id, int64_t coins,
                   const std::string& label) {
    model::CollectionItemRecord r;
    r.collection_id = model::collection_id(self, "Wallets");
    r.item_id = item_id;
    r.payload = Json(Wallet{coins, label}).dump();
    r.queryable_attributes = {{"label", label}};
    store.write(kv::Put{model::collection_table_name("Wallets"),
                        model::to_item(r), {}});
  }

  std::string dump() {
    std::ostringstream os;
    store.dump(os);
    return os.str();
  }
};

}  // namespace

TEST_CASE("registry rejects duplicates and unknown lookups") {
  Registry r;
  r.register_message<Op>("Op");
  CHECK_THROWS_AS(r.register_message<Op>("Op2"), ApiError);
  CHECK_THROWS_AS(r.register_message<Script>("Op"), ApiError);
  CHECK_THROWS_AS(r.message_tag<Script>(), ApiError);
  CHECK_THROWS_AS(r.decode_message("Nope", "{}"), ApiError);
  CHECK_THROWS_AS(r.decode_message("Op", "{not json"), ApiError);
  CHECK(r.has_message("Op"));
  CHECK(!r.has_message("Script"));
  CHECK_THROWS_AS(r.actor_info("Ghost"), ApiError);
}

TEST_CASE("collection declarations drive the schema set") {
  Fixture f;
  auto decls = f.registry.collection_decls();
  REQUIRE(decls.size() == 1);
  CHECK(decls[0].name == "Wallets");
  CHECK(decls[0].queryable_attributes == std::vector<std::string>{"label"});
  CHECK(f.store.has_table("Collection_Wallets"));

  // a second actor type may not reuse the collection name
  CHECK_THROWS_AS(
      f.registry.register_actor<OtherActor>("OtherActor")
          .collection(&OtherActor::wallets, "Wallets"),
      ApiError);
}

TEST_CASE("effects buffer in call order and storage stays untouched") {
  Fixture f;
  auto inst = f.instance();
  auto before = f.dump();
  auto effects = inst.process(
      f.store, f.script({{"inc", "", "", 5},
                         {"tell", "P/s-0/actor-2", "", 7},
                         {"tell", "P/s-0/actor-2", "", 8},
                         {"ext", "corr-1", "done", 1}}));
  CHECK(f.dump() == before);  // nothing applied during processing

  CHECK(Json::parse(effects.new_actor_state)["total"] == 5);
  REQUIRE(effects.outgoing.size() == 2);
  CHECK(effects.outgoing[0].receiver == ActorId::parse("P/s-0/actor-2"));
  CHECK(effects.outgoing[0].type_tag == "Op");
  CHECK(Json::parse(effects.outgoing[0].payload)["n"] == 7);
  CHECK(Json::parse(effects.outgoing[1].payload)["n"] == 8);
  REQUIRE(effects.external.size() == 1);
  CHECK(effects.external[0].correlation_id == "corr-1");
  CHECK(effects.external[0].type_tag == "Op");
}

TEST_CASE("processing errors discard effects and roll state back") {
  Fixture f;
  auto inst = f.instance();
  auto effects = inst.process(f.store, f.script({{"inc", "", "", 3}}));
  inst.commit(effects.new_actor_state);

  auto before = f.dump();
  CHECK_THROWS_AS(
      inst.process(f.store, f.script({{"inc", "", "", 100},
                                      {"put", "w9", "x", 1},
                                      {"boom", "", "", 0}})),
      std::runtime_error);
  CHECK(f.dump() == before);
  // committed state survives; the pending mutation is gone
  auto redo = inst.process(f.store, f.script({{"inc", "", "", 1}}));
  CHECK(Json::parse(redo.new_actor_state)["total"] == 4);
}

TEST_CASE("commit failure rolls the in-memory actor back") {
  Fixture f;
  auto inst = f.instance();
  auto effects = inst.process(f.store, f.script({{"inc", "", "", 3}}));
  // the runtime could not commit: roll back instead
  inst.rollback();
  auto redo = inst.process(f.store, f.script({{"inc", "", "", 1}}));
  CHECK(Json::parse(redo.new_actor_state)["total"] == 1);
  (void)effects;
}

TEST_CASE("spawn assigns shards deterministically and defers creation") {
  Fixture f;
  f.registry.set_shard_policy("Q", 4);
  auto inst = f.instance();
  auto effects =
      inst.process(f.store, f.script({{"spawn", "Q", "child-1", 42}}));
  REQUIRE(effects.spawns.size() == 1);
  auto expected_shard = model::assign_shard("Q", "child-1", {4});
  CHECK(effects.spawns[0].id ==
        ActorId{"Q", expected_shard.shard_id, "child-1"});
  CHECK(effects.spawns[0].type_tag == "ScriptActor");
  CHECK(Json::parse(effects.spawns[0].initial_state)["total"] == 42);
  // the id was immediately usable in tell()
  REQUIRE(effects.outgoing.size() == 1);
  CHECK(effects.outgoing[0].receiver == effects.spawns[0].id);
  // no actor record exists before commit
  CHECK(f.store.scan(model::kActorStateTable).empty());

  // duplicate spawn of the same instance in one call is rejected
  CHECK_THROWS_AS(
      inst.process(f.store, f.script({{"spawn", "Q", "dup", 1},
                                      {"spawn", "Q", "dup", 2}})),
      ApiError);
}

TEST_CASE("collection caching avoids repeat reads and tracks exact dirt") {
  Fixture f;
  f.seed_wallet("w1", 10, "gold");
  f.seed_wallet("w2", 20, "silver");

  auto inst = f.instance();
  auto reads_before = f.store.counters().gets;
  auto effects = inst.process(f.store, f.script({{"get", "w1", "", 5},
                                                 {"get", "w1", "", 0},
                                                 {"get", "w2", "", 0}}));
  auto reads_after = f.store.counters().gets;
  CHECK(reads_after - reads_before == 2);  // w1 once, w2 once

  REQUIRE(effects.dirty_items.size() == 1);  // only w1 changed
  CHECK(effects.dirty_items[0].item_id == "w1");
  CHECK(effects.dirty_items[0].table == "Collection_Wallets");
  CHECK(effects.dirty_items[0].collection_id ==
        model::collection_id(f.self, "Wallets"));
  CHECK(Json::parse(effects.dirty_items[0].payload)["coins"] == 15);
  CHECK(effects.dirty_items[0].queryable_attributes.at("label") == "gold");
  CHECK(effects.deleted_items.empty());
}

TEST_CASE("collection get on a missing item is an application error") {
  Fixture f;
  auto inst = f.instance();
  CHECK_THROWS_AS(inst.process(f.store, f.script({{"get", "ghost", "", 0}})),
                  ApiError);
  auto effects = inst.process(f.store, f.script({{"contains", "ghost", "", 0}}));
  CHECK(Json::parse(effects.new_actor_state)["log"] == "n");
}

TEST_CASE("collection put and delete are buffered, visible locally") {
  Fixture f;
  f.seed_wallet("w1", 10, "gold");

  auto inst = f.instance();
  auto reads_before = f.store.counters().gets;
  auto effects = inst.process(f.store, f.script({{"put", "w3", "iron", 30},
                                                 {"get", "w3", "", 1},
                                                 {"del", "w1", "", 0},
                                                 {"contains", "w1", "", 0}}));
  // put-then-get never touched storage; delete answers from the buffer
  CHECK(f.store.counters().gets - reads_before == 0);
  REQUIRE(effects.dirty_items.size() == 1);
  CHECK(effects.dirty_items[0].item_id == "w3");
  CHECK(Json::parse(effects.dirty_items[0].payload)["coins"] == 31);
  CHECK(effects.dirty_items[0].queryable_attributes.at("label") == "iron");
  REQUIRE(effects.deleted_items.size() == 1);
  CHECK(effects.deleted_items[0].item_id == "w1");
  CHECK(Json::parse(effects.new_actor_state)["log"] == "n");
}

TEST_CASE("find overlays local changes onto the committed index") {
  Fixture f;
  f.seed_wallet("w1", 10, "gold");
  f.seed_wallet("w2", 20, "gold");
  f.seed_wallet("w3", 30, "silver");

  auto inst = f.instance();
  // mutate w2 out of "gold" (via put with label silver), put w4 into "gold",
  // delete w1, and read w3 without changing it
  auto effects = inst.process(f.store, f.script({
                                           {"put", "w2", "silver", 21},
                                           {"put", "w4", "gold", 40},
                                           {"del", "w1", "", 0},
                                           {"get", "w3", "", 0},
                                           {"find", "label", "gold", 0},
                                           {"find", "label", "silver", 0},
                                       }));
  auto log = Json::parse(effects.new_actor_state)["log"].get<std::string>();
  // gold: only w4 (w1 deleted, w2 relabeled); silver: w2 and w3, id order
  CHECK(log == "w4=40;w2=21;w3=30;");
}

TEST_CASE("find rejects attributes that are not queryable") {
  Fixture f;
  auto inst = f.instance();
  CHECK_THROWS_AS(inst.process(f.store, f.script({{"find", "coins", "10", 0}})),
                  ApiError);
}

TEST_CASE("processing is deterministic given state and message") {
  Fixture f;
  f.seed_wallet("w1", 10, "gold");
  auto msg = f.script({{"inc", "", "", 2},
                       {"get", "w1", "", 1},
                       {"put", "w5", "tin", 5},
                       {"tell", "P/s-0/actor-9", "", 3},
                       {"ext", "c-9", "", 4},
                       {"find", "label", "gold", 0},
                       {"spawn", "Q", "kid", 7}});
  auto a = f.instance();
  auto b = f.instance();
  auto ea = a.process(f.store, msg);
  auto eb = b.process(f.store, msg);
  CHECK(ea == eb);
}

TEST_CASE("feature handles outside a processing call refuse to work") {
  ScriptActor detached;
  CHECK_THROWS_AS(detached.sender.tell(ActorId{"P", "s-0", "x"}, Op{}), ApiError);
  CHECK_THROWS_AS(detached.spawner.spawn(ScriptActor{}, "P", "x"), ApiError);
  CHECK_THROWS_AS(detached.wallets.get("w"), ApiError);
}

TEST_CASE("actor instances load from stored records") {
  Fixture f;
  model::ActorStateRecord record;
  record.actor_id = f.self;
  record.type_tag = "ScriptActor";
  record.state = R"({"total": 77, "log": ""})";
  auto inst = ActorInstance::from_record(f.registry, record);
  CHECK(inst.id() == f.self);
  CHECK(inst.type_tag() == "ScriptActor");
  auto effects = inst.process(f.store, f.script({{"inc", "", "", 1}}));
  CHECK(Json::parse(effects.new_actor_state)["total"] == 78);
}
