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

#include <limits>
#include <map>
#include <memory>
#include <tuple>

#include "troupe/harness/client.hpp"
#include "troupe/harness/scenarios.hpp"
#include "troupe/model/records.hpp"

namespace troupe::harness {
namespace {

struct UserActor : api::ActorBehavior {
  int64_t booked = 0;

  api::MessageSender sender;

  void receive(const api::Message& msg) override {
    if (msg.type_tag() == "BookRequest") {
      const auto req = msg.as<BookRequest>();
      sender.tell(model::ActorId::parse(req.hotel),
                  ReserveMsg{req.room_type, req.day, self().canonical(),
                             req.correlation});
    } else if (msg.type_tag() == "Confirm") {
      const auto c = msg.as<ConfirmMsg>();
      if (c.ok) booked += 1;
      sender.tell_external(c.correlation,
                           BookingReply{c.ok ? "confirmed" : "full", c.day});
    }
  }
};

void to_json(api::Json& j, const UserActor& a) {
  j = api::Json{{"booked", a.booked}};
}
void from_json(const api::Json& j, UserActor& a) {
  a.booked = j.value("booked", int64_t{0});
}

struct HotelActor : api::ActorBehavior {
  api::MessageSender sender;
  api::Collection<RoomInventoryItem> inventory;
  api::Collection<BookingItem> bookings;

  void receive(const api::Message& msg) override {
    if (msg.type_tag() != "Reserve") return;
    const auto r = msg.as<ReserveMsg>();
    const auto user = model::ActorId::parse(r.user);
    int64_t day = r.day;
    if (day < 0) {
      // First free day of the requested room type, via the index.
      int64_t best = std::numeric_limits<int64_t>::max();
      for (const auto& [id, item] : inventory.find("room_type", r.room_type)) {
        if (item.remaining > 0 && item.day < best) best = item.day;
      }
      if (best == std::numeric_limits<int64_t>::max()) {
        sender.tell(user, ConfirmMsg{false, -1, r.correlation});
        return;
      }
      day = best;
    }
    const auto iid = inventory_item_id(r.room_type, day);
    if (!inventory.contains(iid)) {
      sender.tell(user, ConfirmMsg{false, day, r.correlation});
      return;
    }
    auto& inv = inventory.get(iid);
    if (inv.remaining <= 0) {
      sender.tell(user, ConfirmMsg{false, day, r.correlation});
      return;
    }
    inv.remaining -= 1;
    bookings.put(r.correlation, BookingItem{r.user, r.room_type, day});
    sender.tell(user, ConfirmMsg{true, day, r.correlation});
  }
};

void to_json(api::Json& j, const HotelActor&) { j = api::Json::object(); }
void from_json(const api::Json&, HotelActor&) {}

constexpr int kUserShards = 20;
constexpr int kHotelShards = 10;

}  // namespace

api::Registry hotel_registry() {
  api::Registry r;
  r.register_message<BookRequest>("BookRequest");
  r.register_message<ReserveMsg>("Reserve");
  r.register_message<ConfirmMsg>("Confirm");
  r.register_message<BookingReply>("BookingReply");
  r.register_item<RoomInventoryItem>(
      "RoomInventory", {"room_type"}, [](const RoomInventoryItem& v) {
        return std::map<std::string, std::string>{{"room_type", v.room_type}};
      });
  r.register_item<BookingItem>("Booking", {});
  r.register_actor<UserActor>("User").sender(&UserActor::sender);
  r.register_actor<HotelActor>("Hotel")
      .sender(&HotelActor::sender)
      .collection(&HotelActor::inventory, "Inventory")
      .collection(&HotelActor::bookings, "Bookings");
  return r;
}

model::ActorId user_actor_id(int user_index) {
  return {"User", "s-" + std::to_string(user_index % kUserShards),
          "user-" + std::to_string(user_index)};
}

model::ActorId hotel_actor_id(int hotel_index) {
  return {"Hotel", "s-" + std::to_string(hotel_index % kHotelShards),
          "hotel-" + std::to_string(hotel_index)};
}

std::string inventory_item_id(const std::string& room_type, int64_t day) {
  return room_type + "#day-" + std::to_string(day);
}

void seed_hotel(kv::Store& store, int hotels, int users, int days,
                int rooms_per_type) {
  for (int i = 0; i < users; ++i) {
    model::ActorStateRecord rec{user_actor_id(i), "User",
                                api::Json{{"booked", 0}}.dump()};
    store.write(kv::Put{model::kActorStateTable, model::to_item(rec), {}});
  }
  for (int k = 0; k < hotels; ++k) {
    model::ActorStateRecord rec{hotel_actor_id(k), "Hotel",
                                api::Json::object().dump()};
    store.write(kv::Put{model::kActorStateTable, model::to_item(rec), {}});
    for (int t = 0; t < kRoomTypeCount; ++t) {
      for (int d = 0; d < days; ++d) {
        model::CollectionItemRecord item;
        item.collection_id = model::collection_id(hotel_actor_id(k), "Inventory");
        item.item_id = inventory_item_id(kRoomTypes[t], d);
        item.payload =
            api::Json(RoomInventoryItem{kRoomTypes[t], d, rooms_per_type})
                .dump();
        item.queryable_attributes = {{"room_type", kRoomTypes[t]}};
        store.write(kv::Put{model::collection_table_name("Inventory"),
                            model::to_item(item),
                            {}});
      }
    }
  }
}

OracleReport check_hotel_capacity(kv::Store& store, int days,
                                  int rooms_per_type) {
  OracleReport report;
  // (hotel collection owner, room type, day) -> confirmed bookings
  std::map<std::tuple<std::string, std::string, int64_t>, int64_t> booked;
  for (const auto& raw :
       store.scan(model::collection_table_name("Bookings"))) {
    const auto rec = model::collection_item_from_item(raw);
    const auto b = api::Json::parse(rec.payload).get<BookingItem>();
    const auto owner =
        rec.collection_id.substr(0, rec.collection_id.rfind('#'));
    if (b.day < 0 || b.day >= days) {
      report.fail("booking on day " + std::to_string(b.day) + ": " +
                  rec.item_id);
      continue;
    }
    booked[{owner, b.room_type, b.day}] += 1;
  }
  size_t inventory_items = 0;
  for (const auto& raw :
       store.scan(model::collection_table_name("Inventory"))) {
    const auto rec = model::collection_item_from_item(raw);
    const auto inv = api::Json::parse(rec.payload).get<RoomInventoryItem>();
    const auto owner =
        rec.collection_id.substr(0, rec.collection_id.rfind('#'));
    inventory_items += 1;
    const auto key = std::make_tuple(owner, inv.room_type, inv.day);
    const int64_t b = booked.count(key) ? booked.at(key) : 0;
    booked.erase(key);
    if (inv.remaining < 0) {
      report.fail("negative inventory: " + owner + " " + rec.item_id);
    }
    if (b > rooms_per_type) {
      report.fail("overbooked " + owner + " " + rec.item_id + ": " +
                  std::to_string(b) + " > " + std::to_string(rooms_per_type));
    }
    if (inv.remaining + b != rooms_per_type) {
      report.fail("inventory drift " + owner + " " + rec.item_id + ": " +
                  std::to_string(inv.remaining) + " remaining with " +
                  std::to_string(b) + " booked");
    }
  }
  // Bookings whose inventory item vanished.
  for (const auto& [key, n] : booked) {
    report.fail("booking without inventory: " + std::get<0>(key) + " " +
                std::get<1>(key) + " day " + std::to_string(std::get<2>(key)) +
                " x" + std::to_string(n));
  }
  if (inventory_items == 0) report.fail("inventory scan came back empty");
  return report;
}

ScenarioResult run_hotel(const ScenarioConfig& cfg) {
  ScenarioHarness h(cfg, hotel_registry());
  seed_hotel(h.store(), cfg.hotels, cfg.users, cfg.days, cfg.rooms_per_type);
  h.start_workers();

  std::mt19937_64 rng(cfg.seed);
  std::vector<LatencySample> samples(cfg.requests);
  const int nclients = 4;
  std::vector<std::unique_ptr<Client>> clients;
  for (int i = 0; i < nclients; ++i) {
    clients.push_back(std::make_unique<Client>(
        h.clock(), h.store(), "guest-" + std::to_string(i), cfg.seed + i));
  }

  h.run_timeline(cfg.requests, [&](int j) {
    const int user = static_cast<int>(rng() % cfg.users);
    const int hotel = static_cast<int>(rng() % cfg.hotels);
    const std::string rt = kRoomTypes[rng() % kRoomTypeCount];
    const int64_t day = (rng() % 5 == 0)
                            ? int64_t{-1}
                            : static_cast<int64_t>(rng() % cfg.days);
    const std::string corr = "b-" + std::to_string(j);
    samples[j].correlation_id = corr;
    samples[j].sent_us = h.clock().now_us();
    clients[j % nclients]->send(
        user_actor_id(user), "BookRequest",
        api::Registry::encode(
            BookRequest{hotel_actor_id(hotel).canonical(), rt, day, corr}));
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
  checks.merge(check_hotel_capacity(h.store(), cfg.days, cfg.rooms_per_type));
  return h.finish(samples, std::move(checks));
}

}  // namespace troupe::harness
