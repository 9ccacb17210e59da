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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "faultlab/emitter.h"
#include "faultlab/recovery.h"
#include "faultlab/simkernel.h"
#include "faultlab/topology.h"
#include "faultlab/workload.h"

namespace faultlab {

enum class InjectCommand : std::uint8_t { NF, LF, SCF, TwoCF, BF, RouteCorrupt };
enum class RestoreCommand : std::uint8_t { LR, BR };
enum class FailStep : std::uint8_t { Remove, Add, Boot };

std::string_view to_string(InjectCommand c);
std::string_view to_string(RestoreCommand c);
std::string_view to_string(FailStep s);

struct Injection {
  SimTime at = 0;
  InjectCommand cmd = InjectCommand::LF;
  std::vector<std::string> targets;  // empty means a random target
  std::vector<SimTime> gaps;         // between successive link failures
};

struct Restoration {
  SimTime at = 0;
  RestoreCommand cmd = RestoreCommand::LR;
  std::vector<std::string> targets;  // "injected" selects what the injector took down
  std::optional<FailStep> fail_step;
};

struct ScriptedError {
  SimTime at = 0;
  HwErrorKind kind = HwErrorKind::Receiver8b10b;
  std::string target;  // router cname
};

struct Campaign {
  std::string name;
  std::string scenario;  // free-form label carried into the report
  TorusDims dims;
  std::uint64_t seed = 0;
  std::optional<SimTime> duration;
  bool supervision = false;
  std::int64_t start_epoch = 1473176186;
  std::uint64_t flow_rate = 1000000;
  RecoveryTimings timings;
  WorkloadSpec workload;
  std::vector<Injection> injections;
  std::vector<Restoration> restorations;
  std::vector<ScriptedError> scripted_errors;

  /// The explicit duration, or the last scheduled action plus ten minutes.
  SimTime effective_duration() const;
};

class CampaignInvalid : public std::runtime_error {
 public:
  CampaignInvalid(std::string entry, const std::string& what);
  /// JSON path of the first offending entry, e.g. "injections[2].target".
  const std::string& entry() const { return entry_; }

 private:
  std::string entry_;
};

/// Parses a campaign document. Throws CampaignInvalid.
Campaign parse_campaign(std::string_view json_text);
/// Canonical JSON with every field explicit; parse_campaign round-trips it.
std::string campaign_json(const Campaign& c);
/// Hex FNV-1a 64 of the canonical JSON.
std::string config_digest(const Campaign& c);
/// Checks targets and workload against a torus. Throws CampaignInvalid.
void validate_campaign(const Campaign& c, const Topology& topo);

struct ConnectionRef {
  RouterId router = 0;
  Direction dir = Direction::XPlus;
  friend bool operator==(const ConnectionRef&, const ConnectionRef&) = default;
};

/// The connection a link endpoint belongs to.
ConnectionRef connection_of(const Topology& topo, const LinkEndpoint& end);

struct ScheduledFailure {
  SimTime at = 0;
  LinkId link = 0;
};

/// One failure per member link not already Down, starting at `at`; gaps[i]
/// separates the i-th and (i+1)-th failure, the last gap repeating. Throws
/// AlreadyDown when every member link is Down.
std::vector<ScheduledFailure> inject_connection(const Topology& topo, const FabricState& fabric,
                                                ConnectionRef conn, SimTime at,
                                                std::span<const SimTime> gaps);

/// Two connections in different dimensions whose owning routers sit on
/// blades differing in x, y and z.
std::pair<ConnectionRef, ConnectionRef> pick_2cf_targets(const Topology& topo,
                                                         std::uint64_t seed);

class RestoreOnHealthy : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Throws RestoreOnHealthy unless every link is Down or Masked.
void check_restorable(const FabricState& fabric, std::span<const LinkId> links);

/// Links incident to a blade's two routers, each once.
std::vector<LinkId> blade_links(const Topology& topo, BladeId blade);

struct ExperimentArtifacts {
  std::string header;  // "#run ..." and "#campaign ..." lines
  std::vector<LogRecord> log;
  std::vector<TelemetrySample> telemetry;
  std::vector<AppJob> jobs;
  std::vector<RecoveryProcedure> procedures;
  std::optional<DeadlockState> deadlock;
  std::int64_t epoch_start = 0;
  SimTime end = 0;

  std::string events_text() const;
};

/// Executes a campaign on a torus of the campaign's dimensions.
ExperimentArtifacts run_campaign(const Campaign& campaign, const Topology& topo);

}  // namespace faultlab
