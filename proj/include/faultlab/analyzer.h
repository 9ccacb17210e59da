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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "faultlab/emitter.h"
#include "faultlab/recovery.h"

namespace faultlab {

/// An event log with its header metadata.
struct ParsedLog {
  std::string name;      // from "#campaign name=..."
  std::string scenario;  // from "#campaign ... scenario=..."
  std::optional<std::uint64_t> seed;
  std::vector<LogRecord> records;
};

/// Skips blank lines and '#' comments, reading the run and campaign headers.
/// Throws MalformedLog with a 1-based line number.
ParsedLog parse_log(std::string_view text);

/// A recovery procedure as seen in the log. Times are epoch milliseconds.
struct ProcedureView {
  ProcedureKind kind = ProcedureKind::Automatic;
  Outcome outcome = Outcome::Pending;
  std::int64_t first_report = 0;  // first failure it absorbed, or its start
  std::int64_t start = 0;
  std::optional<std::int64_t> end;
  std::array<std::optional<std::int64_t>, kRecoveryPhases> phase;

  std::int64_t duration_ms() const { return end ? *end - first_report : 0; }
};

struct Reconstruction {
  std::vector<ProcedureView> procedures;
  std::vector<std::string> anomalies;  // overlapping or unterminated spans
};

Reconstruction reconstruct_recoveries(const std::vector<LogRecord>& records);

struct DeadlockConfig {
  std::int64_t window_ms = 60000;
  int k = 3;
};

struct DeadlockAlarm {
  std::int64_t onset = 0;         // epoch ms, end of the k-th rising window
  std::int64_t success_time = 0;  // the recovery_success it follows
  std::vector<std::size_t> window_emitters;  // distinct ORB emitters per window
  std::size_t lack_of_progress = 0;          // LB lack-of-progress records after success
};

std::optional<DeadlockAlarm> detect_deadlock(const std::vector<LogRecord>& records,
                                             DeadlockConfig config = {});

/// Epoch-second window, both ends inclusive.
struct ReportWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

class WindowEmpty : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JobSummary {
  std::size_t completed = 0;
  std::size_t killed = 0;
  std::size_t hung = 0;
  std::size_t running = 0;
};

/// Counts statuses in a jobs CSV.
JobSummary summarize_jobs(std::string_view jobs_csv);

struct ExperimentReport {
  std::string experiment_id;
  std::int64_t start = 0;
  std::int64_t end = 0;
  double window_hours = 0;
  std::string scenario;
  std::size_t components_targeted = 0;
  bool admin_console_errors = false;
  std::int64_t recovery_time_s = 0;
  std::size_t procedures = 0;
  std::size_t success = 0;
  std::size_t failure = 0;
  bool last_recovery_failed = false;
  std::size_t application_errors = 0;
  std::size_t warm_swap_failed = 0;
  std::size_t link_failed = 0;
  std::size_t ec_node_failed = 0;
  std::size_t link_recovery_failed = 0;
  std::size_t lane_recovery_failed = 0;
  std::size_t channel_failed = 0;
  std::size_t blade_recovery_success = 0;
  std::size_t warm_swap_success = 0;
  std::size_t link_recovery_success = 0;

  std::size_t telemetry_samples = 0;
  JobSummary jobs;
  std::optional<DeadlockAlarm> deadlock;
  std::vector<std::string> anomalies;

  /// "Entry: value" lines in the fixed report order.
  std::string to_text() const;
  std::string to_json() const;
};

/// Without a window, spans the first to the last record (whole seconds).
/// Throws WindowEmpty when no record falls inside the window.
ExperimentReport build_report(const ParsedLog& log, const std::vector<TelemetrySample>& telemetry,
                              const JobSummary& jobs, std::optional<ReportWindow> window = {},
                              DeadlockConfig deadlock = {});

/// `t,bytes,cumulative_fraction` over per-second traffic totals.
std::string traffic_cdf_csv(const std::vector<TelemetrySample>& telemetry);
/// `t,event_type,count,cumulative_fraction` per hardware error type.
std::string error_cdf_csv(const std::vector<LogRecord>& records);

}  // namespace faultlab
