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

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <vector>

namespace troupe {

// Injectable time source. Every blocking wait in the runtime goes through a
// Clock so that a whole run can execute against virtual time: the virtual
// clock jumps straight to the next deadline whenever every attached thread is
// blocked, which makes timing-sensitive tests both fast and exact.
//
// Threads that participate in a virtual-time run must attach themselves
// (see ClockThreadGuard); with the real clock attach/detach are no-ops.
class Clock {
public:
  static constexpr int64_t kNoDeadline = std::numeric_limits<int64_t>::max();

  virtual ~Clock() = default;

  virtual int64_t now_us() = 0;
  int64_t now_ms() { return now_us() / 1000; }

  virtual void sleep_until(int64_t deadline_us) = 0;
  void sleep_for_us(int64_t us) { sleep_until(now_us() + us); }
  void sleep_for_ms(int64_t ms) { sleep_for_us(ms * 1000); }

  virtual void attach_thread() {}
  virtual void detach_thread() {}

  // Waiters on one shared predicate (e.g. a channel) group under a WaitHub so
  // notify() can hand their blocked-time back to the scheduler before waking
  // them. Membership is managed internally; callers just own the object.
  struct WaitHub {
    std::vector<void*> waiters;  // detail::VWaiter*, guarded by the clock
  };

  // Blocks until pred() holds or the deadline passes. Must be called with lk
  // locked on the mutex guarding pred's state; cv must be the one notify()
  // is told about. Returns pred() at exit (false means the deadline hit).
  virtual bool wait(std::unique_lock<std::mutex>& lk, std::condition_variable& cv,
                    WaitHub* hub, int64_t deadline_us,
                    const std::function<bool()>& pred) = 0;

  // Wakes hub waiters after shared state changed. Call with their mutex held.
  virtual void notify(WaitHub& hub, std::condition_variable& cv) = 0;
};

// Wall-anchored monotonic clock backed by std::chrono.
class RealClock final : public Clock {
public:
  RealClock();
  int64_t now_us() override;
  void sleep_until(int64_t deadline_us) override;
  bool wait(std::unique_lock<std::mutex>& lk, std::condition_variable& cv,
            WaitHub* hub, int64_t deadline_us,
            const std::function<bool()>& pred) override;
  void notify(WaitHub& hub, std::condition_variable& cv) override;

private:
  int64_t base_us_;  // wall time at construction
  std::chrono::steady_clock::time_point origin_;
};

// Discrete-event virtual clock. Time advances only when every attached
// thread is blocked in a clock-mediated wait; it then jumps to the earliest
// pending deadline. Threads blocked without a deadline (channel waits) are
// counted as parked and are woken by notify() when their state changes.
class VirtualClock final : public Clock {
public:
  explicit VirtualClock(int64_t start_us = 0);
  ~VirtualClock() override;

  int64_t now_us() override;
  void sleep_until(int64_t deadline_us) override;
  void attach_thread() override;
  void detach_thread() override;
  bool wait(std::unique_lock<std::mutex>& lk, std::condition_variable& cv,
            WaitHub* hub, int64_t deadline_us,
            const std::function<bool()>& pred) override;
  void notify(WaitHub& hub, std::condition_variable& cv) override;

  int attached() const;

private:
  struct VWaiter;

  void maybe_advance_locked();

  mutable std::mutex m_;
  int64_t now_us_;
  int attached_ = 0;
  int blocked_ = 0;
  std::vector<VWaiter*> waiters_;
};

// RAII attach for threads taking part in a virtual-time run.
class ClockThreadGuard {
public:
  explicit ClockThreadGuard(Clock& c) : c_(c) { c_.attach_thread(); }
  ~ClockThreadGuard() { c_.detach_thread(); }
  ClockThreadGuard(const ClockThreadGuard&) = delete;
  ClockThreadGuard& operator=(const ClockThreadGuard&) = delete;

private:
  Clock& c_;
};

}  // namespace troupe
