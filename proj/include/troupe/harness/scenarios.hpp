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
// Built-in load scenarios. Each exposes its registry, data seeding, and id
// naming so tests can drive the same application types directly, plus a
// closed-loop run function used by the command line tool.

#pragma once

#include <cstdint>
#include <string>

#include "troupe/api/api.hpp"
#include "troupe/harness/harness.hpp"
#include "troupe/model/ids.hpp"

namespace troupe::harness {

// ---------------------------------------------------------------- banking

// Money transfer between accounts spread over bank actors. Debit and credit
// of a same-bank transfer commit atomically; a cross-bank transfer debits,
// forwards a deposit to the owning bank, and the final hop replies. The sum
// of all balances is invariant.
struct TransferMsg {
  std::string from;
  std::string to;
  int64_t amount = 0;
  std::string correlation;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TransferMsg, from, to, amount,
                                                correlation)

struct DepositMsg {
  std::string account;
  int64_t amount = 0;
  std::string correlation;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DepositMsg, account, amount,
                                                correlation)

struct BankReply {
  std::string status;  // ok | rejected | unknown_account
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BankReply, status)

struct AccountItem {
  int64_t balance = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AccountItem, balance)

api::Registry banking_registry();
void seed_banking(kv::Store& store, int banks, int accounts,
                  int64_t initial_balance);
model::ActorId bank_actor_id(int bank_index);
std::string account_name(int account_index);
int bank_of_account(int account_index, int banks);
int64_t banking_total_balance(kv::Store& store);
ScenarioResult run_banking(const ScenarioConfig& cfg);

// ---------------------------------------------------------------- hotel

// Room booking through user actors: a booking request hops client -> user ->
// hotel -> user -> outbox. Hotels keep per-(room type, day) inventory in a
// queryable collection; confirmed bookings never exceed capacity.
struct BookRequest {
  std::string hotel;  // canonical hotel actor id
  std::string room_type;
  int64_t day = 0;  // -1: first free day of that room type
  std::string correlation;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BookRequest, hotel, room_type,
                                                day, correlation)

struct ReserveMsg {
  std::string room_type;
  int64_t day = 0;
  std::string user;  // canonical user actor id
  std::string correlation;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ReserveMsg, room_type, day,
                                                user, correlation)

struct ConfirmMsg {
  bool ok = false;
  int64_t day = -1;
  std::string correlation;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ConfirmMsg, ok, day,
                                                correlation)

struct BookingReply {
  std::string status;  // confirmed | full
  int64_t day = -1;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BookingReply, status, day)

struct RoomInventoryItem {
  std::string room_type;
  int64_t day = 0;
  int64_t remaining = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RoomInventoryItem, room_type,
                                                day, remaining)

struct BookingItem {
  std::string user;
  std::string room_type;
  int64_t day = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BookingItem, user, room_type,
                                                day)

inline constexpr const char* kRoomTypes[] = {"standard", "suite"};
inline constexpr int kRoomTypeCount = 2;

api::Registry hotel_registry();
void seed_hotel(kv::Store& store, int hotels, int users, int days,
                int rooms_per_type);
model::ActorId hotel_actor_id(int hotel_index);
model::ActorId user_actor_id(int user_index);
std::string inventory_item_id(const std::string& room_type, int64_t day);
// Bookings stay within capacity and match the inventory decrements.
OracleReport check_hotel_capacity(kv::Store& store, int days,
                                  int rooms_per_type);
ScenarioResult run_hotel(const ScenarioConfig& cfg);

// ---------------------------------------------------------------- fifo

// Many clients stream sequence numbers at one probe actor which verifies
// per-sender ordering as it consumes.
struct SeqMsg {
  std::string sender;
  int64_t seq = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SeqMsg, sender, seq)

struct ProbeQuery {
  std::string correlation;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ProbeQuery, correlation)

api::Registry fifo_registry();
void seed_fifo(kv::Store& store);
model::ActorId fifo_probe_id();
ScenarioResult run_fifo(const ScenarioConfig& cfg);

// Dispatch on cfg.scenario; throws std::invalid_argument for unknown names.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace troupe::harness
