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
// Scenario front end: runs one of the built-in load scenarios against an
// embedded store and worker fleet, optionally under fault injection, prints
// a JSON result, and exits 0 only when every correctness check passed.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "troupe/harness/scenarios.hpp"

namespace {

// "count@timeMs" or a bare "timeMs" for a single kill.
std::vector<int64_t> parse_kills(const std::string& text) {
  std::vector<int64_t> out;
  int count = 1;
  int64_t at_ms = 0;
  const auto at = text.find('@');
  if (at == std::string::npos) {
    at_ms = std::stoll(text);
  } else {
    count = std::stoi(text.substr(0, at));
    at_ms = std::stoll(text.substr(at + 1));
  }
  if (count < 0 || at_ms < 0) {
    throw CLI::ValidationError("--kill-workers", "counts and times must be >= 0");
  }
  for (int i = 0; i < count; ++i) out.push_back(at_ms);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "troupe: actor runtime load scenarios with fault injection and "
      "correctness checks"};

  troupe::harness::ScenarioConfig cfg;
  std::vector<std::string> kill_specs;
  std::vector<std::string> stall_specs;
  int64_t run_timeout_ms = cfg.run_timeout_us / 1000;

  app.add_option("--scenario", cfg.scenario,
                 "Scenario: banking, hotel, or fifo")
      ->check(CLI::IsMember({"banking", "hotel", "fifo"}))
      ->capture_default_str();
  app.add_option("--workers", cfg.workers, "Worker processes to start")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--requests", cfg.requests,
                 "Requests (fifo: messages per sender)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Run seed")->capture_default_str();
  app.add_flag("--fake-clock,!--real-clock", cfg.fake_clock,
               "Run on the deterministic simulated clock")
      ->capture_default_str();
  app.add_option("--inject-spacing-us", cfg.inject_spacing_us,
                 "Gap between injected requests")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--run-timeout-ms", run_timeout_ms,
                 "Budget for replies and quiescence")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--quiesce,!--no-quiesce", cfg.quiesce_at_end,
               "Wait for full passivation before the final checks")
      ->capture_default_str();

  app.add_option("--polling-interval-ms", cfg.worker.polling_interval_ms,
                 "Worker inbox polling interval")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--processing-slots", cfg.worker.processing_slots,
                 "Concurrent shard drains per worker")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--max-active-shards", cfg.worker.max_active_shards,
                 "Shard claim cap per worker")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--park-after-idle-ms", cfg.worker.park_after_idle_ms,
                 "Idle time before a shard parks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--parking-threshold-ms", cfg.worker.parking_threshold_ms,
                 "Parked time before passivation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--lease-duration-ms", cfg.worker.lease_duration_ms,
                 "Worker lease; peers reclaim after it lapses")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--heartbeat-interval-ms", cfg.worker.heartbeat_interval_ms,
                 "Lease refresh cadence")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--max-message-retries", cfg.worker.max_message_retries,
                 "Attempts before a message dead-letters")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  app.add_option("--banks", cfg.banks, "Banking: bank actors (= shards)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--accounts", cfg.accounts, "Banking: accounts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--hotels", cfg.hotels, "Hotel: hotel actors")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--users", cfg.users, "Hotel: user actors")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--days", cfg.days, "Hotel: bookable days")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--rooms-per-type", cfg.rooms_per_type,
                 "Hotel: capacity per room type and day")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--senders", cfg.senders, "Fifo: concurrent senders")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  app.add_option("--store-transient-p", cfg.store_transient_p,
                 "Probability a store write fails transiently")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--store-latency-min-us", cfg.store_latency_min_us,
                 "Store latency lower bound")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--store-latency-max-us", cfg.store_latency_max_us,
                 "Store latency upper bound")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  app.add_option("--kill-workers", kill_specs,
                 "Kill workers: count@timeMs (repeatable)");
  app.add_option("--stall-worker", stall_specs,
                 "Freeze a worker: durationMs@timeMs (repeatable)");
  app.add_option("--respawn-delay-ms", cfg.chaos.respawn_delay_ms,
                 "Delay before a killed worker's replacement starts")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_flag("--respawn,!--no-respawn", cfg.chaos.respawn,
               "Replace killed workers")
      ->capture_default_str();
  app.add_flag("--disable-fencing", cfg.disable_fencing,
               "Drop commit-time ownership guards (fault demonstration)");

  app.add_option("--report-path", cfg.report_path,
                 "Write a JSONL report (summary line + one line per request)");

  CLI11_PARSE(app, argc, argv);

  cfg.run_timeout_us = run_timeout_ms * 1000;
  try {
    for (const auto& spec : kill_specs) {
      for (int64_t t : parse_kills(spec)) cfg.chaos.kill_at_ms.push_back(t);
    }
    for (const auto& spec : stall_specs) {
      const auto at = spec.find('@');
      if (at == std::string::npos) {
        throw CLI::ValidationError("--stall-worker",
                                   "expected durationMs@timeMs");
      }
      troupe::harness::StallSpec s;
      s.duration_ms = std::stoll(spec.substr(0, at));
      s.at_ms = std::stoll(spec.substr(at + 1));
      cfg.chaos.stalls.push_back(s);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "bad chaos spec: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto result = troupe::harness::run_scenario(cfg);
    std::cout << result.to_json().dump(2) << "\n";
    return result.ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 2;
  }
}
