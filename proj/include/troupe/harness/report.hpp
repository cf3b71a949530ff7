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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "troupe/api/api.hpp"

namespace troupe::harness {

// One request's life: when the harness injected it and when its reply
// appeared in the outbox. replied_us stays -1 when no reply ever came.
struct LatencySample {
  std::string correlation_id;
  int64_t sent_us = 0;
  int64_t replied_us = -1;
};

struct LatencyStats {
  size_t count = 0;
  double mean_us = 0;
  double median_us = 0;
  double p95_us = 0;
  int64_t min_us = 0;
  int64_t max_us = 0;
};

LatencyStats summarize_latencies(std::vector<int64_t> latencies_us);

api::Json to_json(const LatencyStats& s);

// One summary object, then one line per sample.
void write_report_jsonl(const std::string& path, const api::Json& summary,
                        const std::vector<LatencySample>& samples);

}  // namespace troupe::harness
