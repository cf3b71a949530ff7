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

#include <deque>
#include <limits>
#include <mutex>
#include <optional>
#include <utility>

#include "troupe/clock.hpp"

namespace troupe::runtime {

enum class ChanStatus { Ok, Timeout, Closed };

// MPMC queue whose blocking goes through the injected Clock, so stations work
// identically under real and virtual time. close() wakes everyone; receivers
// drain remaining items before observing Closed.
template <typename T>
class Channel {
public:
  explicit Channel(Clock& clock,
                   size_t capacity = std::numeric_limits<size_t>::max())
      : clock_(clock), cap_(capacity) {}

  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  bool send(T v) {
    std::unique_lock<std::mutex> lk(m_);
    clock_.wait(lk, cv_, &hub_, Clock::kNoDeadline,
                [&] { return q_.size() < cap_ || closed_; });
    if (closed_) return false;
    q_.push_back(std::move(v));
    clock_.notify(hub_, cv_);
    return true;
  }

  bool try_send(T v) {
    std::unique_lock<std::mutex> lk(m_);
    if (closed_ || q_.size() >= cap_) return false;
    q_.push_back(std::move(v));
    clock_.notify(hub_, cv_);
    return true;
  }

  std::optional<T> recv() {
    T out;
    if (recv_until(Clock::kNoDeadline, out) == ChanStatus::Ok) {
      return std::optional<T>(std::move(out));
    }
    return std::nullopt;
  }

  ChanStatus recv_until(int64_t deadline_us, T& out) {
    std::unique_lock<std::mutex> lk(m_);
    clock_.wait(lk, cv_, &hub_, deadline_us,
                [&] { return !q_.empty() || closed_; });
    if (!q_.empty()) {
      out = std::move(q_.front());
      q_.pop_front();
      clock_.notify(hub_, cv_);
      return ChanStatus::Ok;
    }
    if (closed_) return ChanStatus::Closed;
    return ChanStatus::Timeout;
  }

  std::optional<T> try_recv() {
    std::unique_lock<std::mutex> lk(m_);
    if (q_.empty()) return std::nullopt;
    T out = std::move(q_.front());
    q_.pop_front();
    clock_.notify(hub_, cv_);
    return std::optional<T>(std::move(out));
  }

  void close() {
    std::unique_lock<std::mutex> lk(m_);
    closed_ = true;
    clock_.notify(hub_, cv_);
  }

  bool closed() const {
    std::lock_guard<std::mutex> g(m_);
    return closed_;
  }

  size_t size() const {
    std::lock_guard<std::mutex> g(m_);
    return q_.size();
  }

private:
  Clock& clock_;
  mutable std::mutex m_;
  std::condition_variable cv_;
  Clock::WaitHub hub_;
  std::deque<T> q_;
  size_t cap_;
  bool closed_ = false;
};

}  // namespace troupe::runtime
