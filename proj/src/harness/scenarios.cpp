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

#include <stdexcept>

#include "troupe/harness/scenarios.hpp"

namespace troupe::harness {

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  if (cfg.scenario == "banking") return run_banking(cfg);
  if (cfg.scenario == "hotel") return run_hotel(cfg);
  if (cfg.scenario == "fifo") return run_fifo(cfg);
  throw std::invalid_argument("unknown scenario: " + cfg.scenario);
}

}  // namespace troupe::harness
