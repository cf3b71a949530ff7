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

#include "troupe/harness/oracles.hpp"

#include <map>
#include <sstream>

#include "troupe/model/records.hpp"

namespace troupe::harness {
namespace {

std::string key_text(const kv::Key& key) {
  std::string out = kv::to_display(key.partition);
  if (key.sort) {
    out += '|';
    out += kv::to_display(*key.sort);
  }
  return out;
}

std::string text_of(const kv::Attributes& attrs, const std::string& name) {
  auto it = attrs.find(name);
  if (it == attrs.end()) return {};
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  return kv::to_display(it->second);
}

struct EnvelopeMeta {
  std::string channel;  // sender -> receiver
  std::string sk;
  int puts = 0;
  int deletes = 0;
};

}  // namespace

OracleReport check_exactly_once_consumption(
    const std::vector<kv::HistoryEntry>& history, bool require_all_consumed) {
  OracleReport report;
  std::map<std::string, EnvelopeMeta> envelopes;
  for (const auto& entry : history) {
    for (const auto& op : entry.ops) {
      if (op.table != model::kActorInboxTable) continue;
      auto& meta = envelopes[key_text(op.key)];
      if (op.kind == kv::HistoryOp::Kind::Put) {
        meta.puts += 1;
      } else if (op.kind == kv::HistoryOp::Kind::Delete) {
        meta.deletes += 1;
      }
    }
  }
  for (const auto& [key, meta] : envelopes) {
    if (meta.puts > 1) {
      report.fail("envelope delivered " + std::to_string(meta.puts) +
                  " times: " + key);
    }
    if (meta.deletes > meta.puts) {
      report.fail("envelope consumed more often than delivered: " + key);
    } else if (meta.puts == 1 && meta.deletes > 1) {
      report.fail("envelope consumed twice: " + key);
    }
    if (require_all_consumed && meta.deletes < meta.puts) {
      report.fail("envelope never consumed: " + key);
    }
  }
  return report;
}

OracleReport check_single_reply_per_correlation(
    const std::vector<kv::HistoryEntry>& history) {
  OracleReport report;
  std::map<std::string, int> writes;
  for (const auto& entry : history) {
    for (const auto& op : entry.ops) {
      if (op.table != model::kOutboxTable) continue;
      if (op.kind == kv::HistoryOp::Kind::Put ||
          op.kind == kv::HistoryOp::Kind::Update) {
        writes[key_text(op.key)] += 1;
      }
    }
  }
  for (const auto& [corr, n] : writes) {
    if (n > 1) {
      report.fail("correlation answered " + std::to_string(n) +
                  " times: " + corr);
    }
  }
  return report;
}

OracleReport check_fifo_per_channel(
    const std::vector<kv::HistoryEntry>& history) {
  OracleReport report;
  std::map<std::string, EnvelopeMeta> envelopes;
  std::map<std::string, std::string> last_put_sk;
  std::map<std::string, std::string> last_del_sk;
  for (const auto& entry : history) {
    for (const auto& op : entry.ops) {
      if (op.table != model::kActorInboxTable) continue;
      const std::string key = key_text(op.key);
      if (op.kind == kv::HistoryOp::Kind::Put) {
        auto& meta = envelopes[key];
        meta.channel = text_of(op.attrs_after, "sender_id") + " -> " +
                       text_of(op.attrs_after, "receiver_id");
        meta.sk = text_of(op.attrs_after, "sk");
        auto& prev = last_put_sk[meta.channel];
        // Zero-padded timestamps: lexicographic order is timestamp order.
        if (!prev.empty() && meta.sk <= prev) {
          report.fail("append order reversed on channel " + meta.channel +
                      ": " + meta.sk + " after " + prev);
        }
        prev = meta.sk;
      } else if (op.kind == kv::HistoryOp::Kind::Delete) {
        auto it = envelopes.find(key);
        if (it == envelopes.end()) continue;  // flagged by exactly-once check
        auto& prev = last_del_sk[it->second.channel];
        if (!prev.empty() && it->second.sk <= prev) {
          report.fail("consumption order reversed on channel " +
                      it->second.channel + ": " + it->second.sk + " after " +
                      prev);
        }
        prev = it->second.sk;
      }
    }
  }
  return report;
}

bool storage_quiescent(kv::Store& store) {
  return store.scan(model::kActorInboxTable).empty() &&
         store.scan(model::kActorTaskTable).empty();
}

}  // namespace troupe::harness
