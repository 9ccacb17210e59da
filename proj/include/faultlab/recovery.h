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

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faultlab/emitter.h"
#include "faultlab/routing.h"
#include "faultlab/simkernel.h"
#include "faultlab/topology.h"

namespace faultlab {

enum class RecoveryPhase : std::uint8_t {
  Aggregating,
  Quiesce,
  RouteCompute,
  RouteInstall,
  Unquiesce,
};
inline constexpr int kRecoveryPhases = 5;
std::string_view to_string(RecoveryPhase p);

enum class ProcedureKind : std::uint8_t { Automatic, WarmSwap };
enum class Outcome : std::uint8_t { Pending, Success, Aborted, Failed };
enum class FailureReason : std::uint8_t {
  None,
  NewFailureDuringRecovery,
  RerouteFailure,
  WarmSwapError,
};

std::string_view to_string(ProcedureKind k);
std::string_view to_string(Outcome o);
std::string_view to_string(FailureReason r);

struct RecoveryTimings {
  SimTime detection_latency = 1 * kSecond;
  SimTime aggregation_window = 10 * kSecond;
  SimTime quiesce = 30 * kSecond;
  SimTime route_compute = 5 * kSecond;
  SimTime route_install = 4 * kSecond;
  SimTime unquiesce = 1 * kSecond;
  // Added to route computation per failed router ASIC in the trigger set.
  SimTime per_failed_asic = 14 * kSecond;
  // Warm swap: link bring-up before the quiesce/reroute sequence.
  SimTime warm_swap_link_init = 50 * kSecond;
  SimTime blade_remove = 60 * kSecond;
  SimTime blade_boot = 300 * kSecond;
};

/// One recovery attempt. For warm swaps, the "first report" is the swap
/// start and the Aggregating slot is unused.
struct RecoveryProcedure {
  std::uint32_t id = 0;
  ProcedureKind kind = ProcedureKind::Automatic;
  std::vector<LinkId> trigger;  // sorted, unique
  SimTime first_report = 0;
  std::array<std::optional<SimTime>, kRecoveryPhases> phase_start;
  std::optional<SimTime> end;
  Outcome outcome = Outcome::Pending;
  FailureReason reason = FailureReason::None;

  SimTime duration() const { return end ? *end - first_report : 0; }
};

/// What the state machine needs from the running experiment.
class RecoveryHost {
 public:
  virtual ~RecoveryHost() = default;
  virtual void emit(LogRecord record) = 0;
  /// Counted holds: the network is quiesced while any hold is active.
  virtual void hold_quiesce(bool on) = 0;
  virtual void install_routes(RouteTable table) = 0;
};

struct WarmSwapRequest {
  std::vector<LinkId> links;
  std::vector<RouterId> routers;  // brought back up together with the links
  bool fail = false;              // scripted error during link bring-up
  std::function<void(bool ok)> done;
};

/// SMW-side automatic network recovery: reports aggregate for a fixed
/// window, then quiesce -> route compute -> route install -> unquiesce. A
/// report arriving after aggregation aborts the attempt and a successor
/// opens with the union of failures.
class RecoveryFsm {
 public:
  RecoveryFsm(Kernel& kernel, const Topology& topo, FabricState& fabric,
              const Emitter& emitter, RecoveryHost& host, RecoveryTimings timings);

  const RecoveryTimings& timings() const { return timings_; }

  /// Report of a newly failed link, delivered at kernel.now().
  void on_failure_report(LinkId link);

  /// Administrator warm swap of links (and routers, for a blade add).
  void start_warm_swap(WarmSwapRequest request);

  /// Masks a Down link whose connection still has Up links. Throws LastLink.
  void mask_link(LinkId link);

  const std::vector<RecoveryProcedure>& procedures() const { return procedures_; }
  bool idle() const { return !current_; }
  std::optional<RecoveryPhase> phase() const;

 private:
  RecoveryProcedure& proc(std::uint32_t id) { return procedures_[id]; }
  bool is_current(std::uint32_t id) const { return current_ && *current_ == id; }
  void log(std::string_view type, Severity severity, std::string cname, std::string message);

  void open(std::vector<LinkId> trigger, SimTime first_report);
  void begin_quiesce(std::uint32_t id);
  void begin_compute(std::uint32_t id);
  void finish_compute(std::uint32_t id);
  void finish_install(std::uint32_t id, std::shared_ptr<RouteTable> table);
  void finish(std::uint32_t id);
  void release_quiesce();
  int failed_asics(const std::vector<LinkId>& links) const;
  std::string cname_list(const std::vector<LinkId>& links) const;

  Kernel& kernel_;
  const Topology& topo_;
  FabricState& fabric_;
  const Emitter& emitter_;
  RecoveryHost& host_;
  RecoveryTimings timings_;

  std::vector<RecoveryProcedure> procedures_;
  std::optional<std::uint32_t> current_;
  bool holding_quiesce_ = false;
};

}  // namespace faultlab
