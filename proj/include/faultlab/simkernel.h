// Copyright 2026 The faultlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <vector>

namespace faultlab {

/// Milliseconds since experiment start.
using SimTime = std::int64_t;

inline constexpr SimTime kSecond = 1000;

enum class EventKind : std::uint8_t {
  Inject,
  FailureReport,
  RecoveryPhase,
  TelemetryTick,
  LogEmit,
  Restore,
};

struct Event {
  SimTime time = 0;
  std::uint64_t seq = 0;  // assigned by the kernel
  EventKind kind = EventKind::LogEmit;
  std::function<void()> action;
};

class TimeTravel : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Single-threaded discrete-event loop. Events dispatch in (time, seq)
/// order; seq is the insertion ordinal.
class Kernel {
 public:
  SimTime now() const { return now_; }

  /// Throws TimeTravel if `time < now()`. Returns the assigned seq.
  std::uint64_t schedule(SimTime time, EventKind kind, std::function<void()> action);

  /// Dispatches every event with time <= t_end, then sets the clock to
  /// t_end. Returns the number of events dispatched.
  std::uint64_t run_until(SimTime t_end);

  /// True if an event other than the one currently dispatching is queued
  /// for the current instant.
  bool pending_now() const;

  std::uint64_t scheduled() const { return next_seq_; }
  std::uint64_t dispatched() const { return dispatched_; }
  std::size_t pending() const { return queue_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
};

/// Seeded 64-bit Mersenne Twister (std::mt19937_64, whose output sequence
/// the standard fixes) with portable bounded draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace faultlab
