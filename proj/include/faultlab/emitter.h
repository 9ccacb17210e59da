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
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "faultlab/simkernel.h"
#include "faultlab/topology.h"
#include "faultlab/workload.h"

namespace faultlab {

enum class LogSource : std::uint8_t { BC, SMW, ALPS, CONSOLE, HW };
enum class Severity : std::uint8_t { Info, Warning, Error, Critical };

std::string_view to_string(LogSource s);
std::string_view to_string(Severity s);
std::optional<LogSource> parse_log_source(std::string_view text);
std::optional<Severity> parse_severity(std::string_view text);

/// Event types written to the event log.
namespace event {
// Automatic recovery and warm swap, logged by the SMW.
inline constexpr std::string_view kFailureDetected = "failure_detected";
inline constexpr std::string_view kRecoveryStart = "recovery_start";
inline constexpr std::string_view kQuiesce = "quiesce";
inline constexpr std::string_view kRerouteStart = "reroute_start";
inline constexpr std::string_view kRerouteDone = "reroute_done";
inline constexpr std::string_view kRoutesInstalled = "routes_installed";
inline constexpr std::string_view kUnquiesce = "unquiesce";
inline constexpr std::string_view kRecoverySuccess = "recovery_success";
inline constexpr std::string_view kRecoveryAborted = "recovery_aborted";
inline constexpr std::string_view kRecoveryFailed = "recovery_failed";
inline constexpr std::string_view kWarmSwapStart = "warm_swap_start";
inline constexpr std::string_view kWarmSwapSuccess = "warm_swap_success";
inline constexpr std::string_view kWarmSwapFailed = "warm_swap_failed";
inline constexpr std::string_view kLinkRecoverySuccess = "link_recovery_success";
inline constexpr std::string_view kLinkRecoveryFailed = "link_recovery_failed";
inline constexpr std::string_view kBladeRecoverySuccess = "blade_recovery_success";
// Blade controller reports.
inline constexpr std::string_view kLinkFailed = "link_failed";
inline constexpr std::string_view kChannelFailed = "channel_failed";
inline constexpr std::string_view kLaneRecoveryFailed = "lane_recovery_failed";
inline constexpr std::string_view kNodeFailed = "node_failed";
inline constexpr std::string_view kBladeFailed = "blade_failed";
// Application placement.
inline constexpr std::string_view kAppStart = "app_start";
inline constexpr std::string_view kAppExit = "app_exit";
inline constexpr std::string_view kEcNodeFailed = "ec_node_failed";
inline constexpr std::string_view kAppError = "app_error";
// Injector and admin console.
inline constexpr std::string_view kExperimentStart = "experiment_start";
inline constexpr std::string_view kExperimentEnd = "experiment_end";
inline constexpr std::string_view kInject = "fi_inject";
inline constexpr std::string_view kRestore = "fi_restore";
inline constexpr std::string_view kCommand = "command";
inline constexpr std::string_view kConsoleError = "console_error";
}  // namespace event

enum class HwErrorKind : std::uint8_t {
  OrbRamScrubbedUpper,
  OrbRamScrubbedLower,
  OrbRequestNoEntry,
  Receiver8b10b,
  LbLackForwardProgress,
  NwSendPacketLengthError,
  SsidStaleOnResponse,
  SsidStale,
  NifSquashedTileRequest,
};

inline constexpr int kHwErrorKinds = 9;

std::string_view event_type(HwErrorKind k);
std::string_view message_text(HwErrorKind k);
Severity severity_of(HwErrorKind k);
std::optional<HwErrorKind> parse_hw_event_type(std::string_view type);
bool is_orb_scrub(std::string_view type);

struct LogRecord {
  std::int64_t epoch_ms = 0;
  LogSource source = LogSource::SMW;
  Severity severity = Severity::Info;
  std::string event_type;
  std::string cname;  // "-" when the record names no component
  std::string message;

  /// `<epoch.millis>|<source>|<severity>|<event_type>|<cname>|<message>`
  std::string to_line() const;
  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

class MalformedLog : public std::runtime_error {
 public:
  MalformedLog(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

LogRecord parse_log_line(std::string_view line, std::size_t line_number = 0);

/// `#run seed=<u64> dims=<x>x<y>x<z> config_digest=<hex>`
std::string run_header(std::uint64_t seed, const TorusDims& dims, std::string_view digest);

struct TelemetrySample {
  std::int64_t t = 0;  // epoch seconds
  RouterId router = 0;
  Direction dir = Direction::XPlus;
  std::uint64_t bytes = 0;
  int up_links = 0;
  friend bool operator==(const TelemetrySample&, const TelemetrySample&) = default;
};

inline constexpr std::string_view kTelemetryHeader = "t,router,direction,bytes,up_links";

std::string telemetry_csv(const Topology& topo, const std::vector<TelemetrySample>& samples);
std::vector<TelemetrySample> parse_telemetry_csv(const Topology& topo, std::string_view text);

/// Deadlock regime: the installed tables loop and traffic is wedged.
struct DeadlockState {
  RouterId origin = 0;  // router with corrupted entries
  SimTime onset = 0;
};

/// Everything the emitter may observe at one tick.
struct NetworkView {
  const Topology* topo = nullptr;
  const FabricState* fabric = nullptr;
  const TrafficAnalysis* offered = nullptr;
  bool quiesced = false;
  std::optional<DeadlockState> deadlock;
};

struct EmitterConfig {
  SimTime scrub_cadence = 5 * kSecond;
  SimTime deadlock_spread_interval = 60 * kSecond;
  SimTime deadlock_late_error_delay = 300 * kSecond;
  SimTime late_error_cadence = 60 * kSecond;
  std::int64_t epoch_start = 1473176186;
};

/// Hardware-error and telemetry emission rules. Stateful only in what the
/// rules need to remember between ticks (blocked-since times, the
/// upper/lower scrub alternation).
class Emitter {
 public:
  Emitter(const Topology& topo, EmitterConfig config);

  const EmitterConfig& config() const { return config_; }
  std::int64_t epoch_ms(SimTime t) const { return config_.epoch_start * 1000 + t; }

  LogRecord record(SimTime t, LogSource source, Severity severity, std::string_view type,
                   std::string cname, std::string message) const;
  LogRecord hw_record(SimTime t, HwErrorKind kind, RouterId router) const;

  /// One NW Send Packet Length Error at the endpoint where a link was failed.
  LogRecord link_failure_record(const LinkEndpoint& at, SimTime t) const;

  /// Called once per 1 Hz tick.
  std::vector<LogRecord> emit_for_state(const NetworkView& view, SimTime t);

  /// One sample per live (router, direction); none while quiesced.
  std::vector<TelemetrySample> sample_telemetry(const NetworkView& view, SimTime t) const;

  /// Routers within `radius` hops of `origin` over live usable connections.
  static std::vector<RouterId> spread_set(const Topology& topo, const FabricState& fabric,
                                          RouterId origin, int radius);

 private:
  const Topology* topo_;
  EmitterConfig config_;
  std::vector<SimTime> blocked_since_;  // -1 when not blocked
  std::vector<std::uint32_t> scrubs_;   // per-router scrub count
};

}  // namespace faultlab
