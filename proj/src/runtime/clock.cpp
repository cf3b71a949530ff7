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

#include "troupe/clock.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <thread>

namespace troupe {

using std::chrono::duration_cast;
using std::chrono::microseconds;

namespace {
// Attachment is tracked per thread so misuse (waiting on a virtual clock from
// a thread nobody attached) fails loudly instead of hanging the simulation.
thread_local VirtualClock* tl_attached_clock = nullptr;
}  // namespace

RealClock::RealClock()
    : base_us_(duration_cast<microseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count()),
      origin_(std::chrono::steady_clock::now()) {}

int64_t RealClock::now_us() {
  return base_us_ +
         duration_cast<microseconds>(std::chrono::steady_clock::now() - origin_)
             .count();
}

void RealClock::sleep_until(int64_t deadline_us) {
  std::this_thread::sleep_until(origin_ + microseconds(deadline_us - base_us_));
}

bool RealClock::wait(std::unique_lock<std::mutex>& lk, std::condition_variable& cv,
                     Clock::WaitHub*, int64_t deadline_us,
                     const std::function<bool()>& pred) {
  if (deadline_us == kNoDeadline) {
    cv.wait(lk, pred);
    return true;
  }
  return cv.wait_until(lk, origin_ + microseconds(deadline_us - base_us_), pred);
}

void RealClock::notify(Clock::WaitHub&, std::condition_variable& cv) {
  cv.notify_all();
}

// A parked thread sleeps on its own cv under the clock mutex, the same mutex
// the advancer and pokers hold when they set the flags. Sleeping under the
// caller's lock instead would race: a flag set between the caller-side
// predicate check and the futex park loses the only wakeup.
struct VirtualClock::VWaiter {
  std::condition_variable own_cv;
  int64_t deadline = kNoDeadline;
  bool expired = false;  // all fields guarded by the clock mutex
  bool poked = false;
  bool counted = false;
};

VirtualClock::VirtualClock(int64_t start_us) : now_us_(start_us) {}

VirtualClock::~VirtualClock() = default;

int64_t VirtualClock::now_us() {
  std::lock_guard<std::mutex> g(m_);
  return now_us_;
}

int VirtualClock::attached() const {
  std::lock_guard<std::mutex> g(m_);
  return attached_;
}

void VirtualClock::attach_thread() {
  std::lock_guard<std::mutex> g(m_);
  attached_++;
  tl_attached_clock = this;
}

void VirtualClock::detach_thread() {
  std::lock_guard<std::mutex> g(m_);
  attached_--;
  tl_attached_clock = nullptr;
  // The departing thread may have been the last one running.
  maybe_advance_locked();
}

void VirtualClock::sleep_until(int64_t deadline_us) {
  std::mutex mtx;
  std::condition_variable cv;
  std::unique_lock<std::mutex> lk(mtx);
  wait(lk, cv, nullptr, deadline_us, [] { return false; });
}

bool VirtualClock::wait(std::unique_lock<std::mutex>& lk, std::condition_variable&,
                        Clock::WaitHub* hub, int64_t deadline_us,
                        const std::function<bool()>& pred) {
  if (tl_attached_clock != this) {
    throw std::logic_error("thread is not attached to the virtual clock");
  }
  for (;;) {
    if (pred()) return true;
    VWaiter w;
    w.deadline = deadline_us;
    {
      std::lock_guard<std::mutex> g(m_);
      if (deadline_us != kNoDeadline && now_us_ >= deadline_us) return false;
      w.counted = true;
      blocked_++;
      waiters_.push_back(&w);
      if (hub) hub->waiters.push_back(&w);
      maybe_advance_locked();
    }
    // Registered while the caller's lock was still held, so any state change
    // from here on pokes this waiter. The lock is dropped for the park so
    // producers can run; pred is re-checked once it is held again.
    lk.unlock();
    bool expired;
    {
      std::unique_lock<std::mutex> cl(m_);
      w.own_cv.wait(cl, [&] { return w.expired || w.poked; });
      if (w.counted) {
        w.counted = false;
        blocked_--;
      }
      waiters_.erase(std::find(waiters_.begin(), waiters_.end(), &w));
      if (hub) {
        hub->waiters.erase(
            std::find(hub->waiters.begin(), hub->waiters.end(), &w));
      }
      expired = w.expired;
    }
    lk.lock();
    if (pred()) return true;
    if (expired) return false;
    // Poked without progress (another waiter consumed the change): re-block.
  }
}

void VirtualClock::notify(Clock::WaitHub& hub, std::condition_variable&) {
  std::lock_guard<std::mutex> g(m_);
  // Hand blocked-time back before waking so the advancer can never see a
  // runnable thread as parked.
  for (void* p : hub.waiters) {
    auto* w = static_cast<VWaiter*>(p);
    w->poked = true;
    if (w->counted) {
      w->counted = false;
      blocked_--;
    }
    w->own_cv.notify_all();
  }
}

void VirtualClock::maybe_advance_locked() {
  if (attached_ == 0 || blocked_ < attached_) return;
  int64_t min_dl = kNoDeadline;
  for (auto* w : waiters_) {
    min_dl = std::min(min_dl, w->deadline);
  }
  if (min_dl == kNoDeadline) return;  // nothing scheduled: genuine idle
  if (min_dl > now_us_) now_us_ = min_dl;
  for (auto* w : waiters_) {
    if (w->deadline <= now_us_ && !w->expired) {
      w->expired = true;
      if (w->counted) {
        w->counted = false;
        blocked_--;
      }
      w->own_cv.notify_all();
    }
  }
}

}  // namespace troupe
