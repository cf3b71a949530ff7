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

#include "troupe/harness/report.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace troupe::harness {

LatencyStats summarize_latencies(std::vector<int64_t> latencies_us) {
  LatencyStats s;
  if (latencies_us.empty()) return s;
  std::sort(latencies_us.begin(), latencies_us.end());
  s.count = latencies_us.size();
  s.min_us = latencies_us.front();
  s.max_us = latencies_us.back();
  s.mean_us = static_cast<double>(std::accumulate(latencies_us.begin(),
                                                  latencies_us.end(),
                                                  int64_t{0})) /
              static_cast<double>(s.count);
  const size_t mid = s.count / 2;
  s.median_us = (s.count % 2 == 1)
                    ? static_cast<double>(latencies_us[mid])
                    : (static_cast<double>(latencies_us[mid - 1]) +
                       static_cast<double>(latencies_us[mid])) /
                          2.0;
  size_t p95 = (s.count * 95 + 99) / 100;
  if (p95 > 0) p95 -= 1;
  if (p95 >= s.count) p95 = s.count - 1;
  s.p95_us = static_cast<double>(latencies_us[p95]);
  return s;
}

api::Json to_json(const LatencyStats& s) {
  return api::Json{{"count", s.count},     {"mean_us", s.mean_us},
                   {"median_us", s.median_us}, {"p95_us", s.p95_us},
                   {"min_us", s.min_us},   {"max_us", s.max_us}};
}

void write_report_jsonl(const std::string& path, const api::Json& summary,
                        const std::vector<LatencySample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open report file: " + path);
  }
  out << summary.dump() << '\n';
  for (const auto& s : samples) {
    api::Json line{{"correlation_id", s.correlation_id},
                   {"sent_us", s.sent_us},
                   {"replied_us", s.replied_us}};
    if (s.replied_us >= 0) line["latency_us"] = s.replied_us - s.sent_us;
    out << line.dump() << '\n';
  }
}

}  // namespace troupe::harness
