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

#include "faultlab/simkernel.h"

#include <limits>
#include <string>

namespace faultlab {

std::uint64_t Kernel::schedule(SimTime time, EventKind kind, std::function<void()> action) {
  if (time < now_) {
    throw TimeTravel("event at " + std::to_string(time) + " ms scheduled at " +
                     std::to_string(now_) + " ms");
  }
  std::uint64_t seq = next_seq_++;
  queue_.push(Event{time, seq, kind, std::move(action)});
  return seq;
}

std::uint64_t Kernel::run_until(SimTime t_end) {
  std::uint64_t count = 0;
  while (!queue_.empty() && queue_.top().time <= t_end) {
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.time;
    ++dispatched_;
    ++count;
    if (ev.action) ev.action();
  }
  if (t_end > now_) now_ = t_end;
  return count;
}

bool Kernel::pending_now() const { return !queue_.empty() && queue_.top().time == now_; }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below needs a positive bound");
  // Rejection sampling keeps the draw unbiased and platform independent.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % bound;
}

}  // namespace faultlab
