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

#include "faultlab/analyzer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace faultlab {

namespace {

std::optional<RecoveryPhase> phase_of(std::string_view type) {
  if (type == event::kQuiesce) return RecoveryPhase::Quiesce;
  if (type == event::kRerouteStart) return RecoveryPhase::RouteCompute;
  if (type == event::kRerouteDone) return RecoveryPhase::RouteInstall;
  if (type == event::kRoutesInstalled) return RecoveryPhase::Unquiesce;
  return std::nullopt;
}

bool is_automatic_terminal(std::string_view type) {
  return type == event::kRecoverySuccess || type == event::kRecoveryAborted ||
         type == event::kRecoveryFailed;
}

std::string field_after(std::string_view line, std::string_view key) {
  auto pos = line.find(key);
  if (pos == std::string_view::npos) return {};
  auto rest = line.substr(pos + key.size());
  return std::string(rest.substr(0, rest.find(' ')));
}

}  // namespace

ParsedLog parse_log(std::string_view text) {
  ParsedLog out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("#campaign ")) {
        out.name = field_after(line, "name=");
        auto pos = line.find("scenario=");
        if (pos != std::string_view::npos) out.scenario = std::string(line.substr(pos + 9));
      } else if (line.starts_with("#run ")) {
        std::string seed = field_after(line, "seed=");
        if (!seed.empty()) {
          try {
            out.seed = std::stoull(seed);
          } catch (const std::exception&) {
            throw MalformedLog(line_no, "bad seed in run header");
          }
        }
      }
      continue;
    }
    out.records.push_back(parse_log_line(line, line_no));
  }
  return out;
}

Reconstruction reconstruct_recoveries(const std::vector<LogRecord>& records) {
  Reconstruction out;
  std::vector<std::int64_t> pending;  // failure reports not yet resolved
  std::optional<std::size_t> automatic;
  std::vector<std::size_t> swaps;  // open warm swaps, oldest first
  std::int64_t last_time = std::numeric_limits<std::int64_t>::min();

  auto first_pending = [&](std::int64_t fallback) {
    return pending.empty() ? fallback : *std::min_element(pending.begin(), pending.end());
  };

  for (const LogRecord& r : records) {
    const std::int64_t t = r.epoch_ms;
    if (t < last_time) out.anomalies.push_back("record out of order at " + std::to_string(t));
    last_time = std::max(last_time, t);
    const std::string_view type = r.event_type;

    if (type == event::kFailureDetected) {
      pending.push_back(t);
    } else if (type == event::kRecoveryStart) {
      if (automatic) {
        out.anomalies.push_back("recovery_start at " + std::to_string(t) +
                                " overlaps an open procedure");
      }
      ProcedureView p;
      p.start = t;
      p.first_report = first_pending(t);
      p.phase[static_cast<int>(RecoveryPhase::Aggregating)] = t;
      automatic = out.procedures.size();
      out.procedures.push_back(p);
    } else if (is_automatic_terminal(type)) {
      if (!automatic) {
        out.anomalies.push_back(std::string(type) + " at " + std::to_string(t) +
                                " without an open procedure");
        continue;
      }
      ProcedureView& p = out.procedures[*automatic];
      p.end = t;
      p.first_report = std::min(p.first_report, first_pending(t));
      if (type == event::kRecoverySuccess) {
        p.outcome = Outcome::Success;
        p.phase[static_cast<int>(RecoveryPhase::Unquiesce)] =
            p.phase[static_cast<int>(RecoveryPhase::Unquiesce)].value_or(t);
        pending.clear();
      } else if (type == event::kRecoveryFailed) {
        p.outcome = Outcome::Failed;
        pending.clear();
      } else {
        // Reports of an aborted attempt carry over to its successor.
        p.outcome = Outcome::Aborted;
      }
      automatic.reset();
    } else if (type == event::kWarmSwapStart) {
      ProcedureView p;
      p.kind = ProcedureKind::WarmSwap;
      p.start = t;
      p.first_report = t;
      swaps.push_back(out.procedures.size());
      out.procedures.push_back(p);
    } else if (type == event::kWarmSwapSuccess || type == event::kWarmSwapFailed) {
      if (swaps.empty()) {
        out.anomalies.push_back(std::string(type) + " at " + std::to_string(t) +
                                " without an open warm swap");
        continue;
      }
      ProcedureView& p = out.procedures[swaps.front()];
      swaps.erase(swaps.begin());
      p.end = t;
      p.outcome = type == event::kWarmSwapSuccess ? Outcome::Success : Outcome::Failed;
    } else if (auto ph = phase_of(type)) {
      const int i = static_cast<int>(*ph);
      ProcedureView* target = nullptr;
      if (automatic && !out.procedures[*automatic].phase[i]) {
        target = &out.procedures[*automatic];
      } else {
        for (std::size_t s : swaps) {
          if (!out.procedures[s].phase[i]) {
            target = &out.procedures[s];
            break;
          }
        }
      }
      if (target) target->phase[i] = t;
    }
  }
  if (automatic) out.anomalies.push_back("procedure left unterminated");
  if (!swaps.empty()) out.anomalies.push_back("warm swap left unterminated");
  return out;
}

std::optional<DeadlockAlarm> detect_deadlock(const std::vector<LogRecord>& records,
                                             DeadlockConfig config) {
  std::optional<std::size_t> terminal;
  for (std::size_t i = records.size(); i-- > 0;) {
    if (is_automatic_terminal(records[i].event_type)) {
      terminal = i;
      break;
    }
  }
  if (!terminal || records[*terminal].event_type != event::kRecoverySuccess) return std::nullopt;
  if (config.window_ms <= 0 || config.k < 2) return std::nullopt;

  DeadlockAlarm alarm;
  alarm.success_time = records[*terminal].epoch_ms;
  std::vector<std::set<std::string>> windows;
  for (std::size_t i = *terminal + 1; i < records.size(); ++i) {
    const LogRecord& r = records[i];
    if (r.event_type == event_type(HwErrorKind::LbLackForwardProgress)) ++alarm.lack_of_progress;
    if (!is_orb_scrub(r.event_type)) continue;
    auto w = static_cast<std::size_t>((r.epoch_ms - alarm.success_time) / config.window_ms);
    if (windows.size() <= w) windows.resize(w + 1);
    windows[w].insert(r.cname);
  }
  for (const auto& w : windows) alarm.window_emitters.push_back(w.size());
  if (alarm.lack_of_progress == 0) return std::nullopt;

  const auto k = static_cast<std::size_t>(config.k);
  std::size_t run = 1;
  for (std::size_t i = 1; i < alarm.window_emitters.size(); ++i) {
    run = alarm.window_emitters[i] > alarm.window_emitters[i - 1] ? run + 1 : 1;
    if (run >= k) {
      alarm.onset = alarm.success_time + static_cast<std::int64_t>(i + 1) * config.window_ms;
      return alarm;
    }
  }
  return std::nullopt;
}

JobSummary summarize_jobs(std::string_view jobs_csv) {
  JobSummary out;
  std::istringstream in{std::string(jobs_csv)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string f;
    for (int i = 0; i < 4 && std::getline(fields, f, ','); ++i) {
    }
    if (f == "completed") {
      ++out.completed;
    } else if (f == "killed") {
      ++out.killed;
    } else if (f == "hung") {
      ++out.hung;
    } else if (f == "running") {
      ++out.running;
    }
  }
  return out;
}

ExperimentReport build_report(const ParsedLog& log, const std::vector<TelemetrySample>& telemetry,
                              const JobSummary& jobs, std::optional<ReportWindow> window,
                              DeadlockConfig deadlock) {
  ReportWindow w;
  if (window) {
    w = *window;
  } else if (!log.records.empty()) {
    std::int64_t lo = log.records.front().epoch_ms, hi = lo;
    for (const LogRecord& r : log.records) {
      lo = std::min(lo, r.epoch_ms);
      hi = std::max(hi, r.epoch_ms);
    }
    w.start = lo / 1000;
    w.end = (hi + 999) / 1000;
  }
  std::vector<LogRecord> in;
  for (const LogRecord& r : log.records) {
    if (r.epoch_ms >= w.start * 1000 && r.epoch_ms <= w.end * 1000) in.push_back(r);
  }
  if (in.empty() || w.end < w.start) {
    throw WindowEmpty("no records in window [" + std::to_string(w.start) + ", " +
                      std::to_string(w.end) + "]");
  }

  ExperimentReport rep;
  rep.experiment_id = log.name;
  rep.scenario = log.scenario;
  rep.start = w.start;
  rep.end = w.end;
  rep.window_hours = static_cast<double>(w.end - w.start) / 3600.0;
  rep.jobs = jobs;
  for (const TelemetrySample& s : telemetry) {
    if (s.t >= w.start && s.t <= w.end) ++rep.telemetry_samples;
  }

  static const std::map<std::string_view, std::size_t ExperimentReport::*> kCounters = {
      {event::kInject, &ExperimentReport::components_targeted},
      {event::kAppError, &ExperimentReport::application_errors},
      {event::kWarmSwapFailed, &ExperimentReport::warm_swap_failed},
      {event::kLinkFailed, &ExperimentReport::link_failed},
      {event::kEcNodeFailed, &ExperimentReport::ec_node_failed},
      {event::kLinkRecoveryFailed, &ExperimentReport::link_recovery_failed},
      {event::kLaneRecoveryFailed, &ExperimentReport::lane_recovery_failed},
      {event::kChannelFailed, &ExperimentReport::channel_failed},
      {event::kBladeRecoverySuccess, &ExperimentReport::blade_recovery_success},
      {event::kWarmSwapSuccess, &ExperimentReport::warm_swap_success},
      {event::kLinkRecoverySuccess, &ExperimentReport::link_recovery_success},
  };
  std::optional<std::int64_t> first_failure;
  for (const LogRecord& r : in) {
    auto it = kCounters.find(r.event_type);
    if (it != kCounters.end()) ++(rep.*(it->second));
    if (r.source == LogSource::CONSOLE && r.severity >= Severity::Error) {
      rep.admin_console_errors = true;
    }
    if (r.event_type == event::kFailureDetected && !first_failure) first_failure = r.epoch_ms;
  }

  Reconstruction recon = reconstruct_recoveries(in);
  rep.anomalies = recon.anomalies;
  std::optional<std::int64_t> last_terminal;
  for (const ProcedureView& p : recon.procedures) {
    if (p.kind != ProcedureKind::Automatic || !p.end) continue;
    ++rep.procedures;
    if (p.outcome == Outcome::Success) {
      ++rep.success;
    } else {
      ++rep.failure;
    }
    rep.last_recovery_failed = p.outcome != Outcome::Success;
    last_terminal = p.end;
  }
  if (last_terminal && first_failure) {
    rep.recovery_time_s =
        static_cast<std::int64_t>(std::llround((*last_terminal - *first_failure) / 1000.0));
  }
  rep.deadlock = detect_deadlock(in, deadlock);
  return rep;
}

namespace {

const char* yes_no(bool b) { return b ? "Yes" : "No"; }

std::string hours(double h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", h);
  return buf;
}

}  // namespace

std::string ExperimentReport::to_text() const {
  std::ostringstream out;
  out << "Experiment ID: " << experiment_id << '\n'
      << "Start Time: " << start << '\n'
      << "End Time: " << end << '\n'
      << "Experiment Window [hours]: " << hours(window_hours) << '\n'
      << "Failure Scenario: " << scenario << '\n'
      << "Components Targeted: " << components_targeted << '\n'
      << "Errors on Admin Console: " << yes_no(admin_console_errors) << '\n'
      << "Recovery Time [seconds]: " << recovery_time_s << '\n'
      << "Number of Recovery Procedures: " << procedures << '\n'
      << "Number of Procedures: Success: " << success << '\n'
      << "Number of Procedures: Failure: " << failure << '\n'
      << "Is Last Recovery Failed?: " << yes_no(last_recovery_failed) << '\n'
      << "Application Errors: " << application_errors << '\n'
      << "Warm Swap Failed: " << warm_swap_failed << '\n'
      << "Gemini Link Failed: " << link_failed << '\n'
      << "EC Node Failed: " << ec_node_failed << '\n'
      << "Gemini Link Recovery Failed: " << link_recovery_failed << '\n'
      << "Gemini Lane Recovery Failed: " << lane_recovery_failed << '\n'
      << "Gemini Channel Failed: " << channel_failed << '\n'
      << "Blade Recovery Success: " << blade_recovery_success << '\n'
      << "Warm Swap Success: " << warm_swap_success << '\n'
      << "Link Recovery Success: " << link_recovery_success << '\n'
      << "Telemetry Samples: " << telemetry_samples << '\n'
      << "Jobs Killed: " << jobs.killed << '\n'
      << "Jobs Hung: " << jobs.hung << '\n'
      << "Deadlock Alarm: " << yes_no(deadlock.has_value());
  if (deadlock) out << " (onset " << deadlock->onset / 1000 << ')';
  out << '\n';
  for (const std::string& a : anomalies) out << "Anomaly: " << a << '\n';
  return out.str();
}

std::string ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["experiment_id"] = experiment_id;
  j["start_time"] = start;
  j["end_time"] = end;
  j["window_hours"] = window_hours;
  j["failure_scenario"] = scenario;
  j["components_targeted"] = components_targeted;
  j["errors_on_admin_console"] = admin_console_errors;
  j["recovery_time_s"] = recovery_time_s;
  j["recovery_procedures"] = procedures;
  j["procedures_success"] = success;
  j["procedures_failure"] = failure;
  j["last_recovery_failed"] = last_recovery_failed;
  j["application_errors"] = application_errors;
  j["warm_swap_failed"] = warm_swap_failed;
  j["gemini_link_failed"] = link_failed;
  j["ec_node_failed"] = ec_node_failed;
  j["gemini_link_recovery_failed"] = link_recovery_failed;
  j["gemini_lane_recovery_failed"] = lane_recovery_failed;
  j["gemini_channel_failed"] = channel_failed;
  j["blade_recovery_success"] = blade_recovery_success;
  j["warm_swap_success"] = warm_swap_success;
  j["link_recovery_success"] = link_recovery_success;
  j["telemetry_samples"] = telemetry_samples;
  j["jobs"] = {{"completed", jobs.completed},
               {"killed", jobs.killed},
               {"hung", jobs.hung},
               {"running", jobs.running}};
  if (deadlock) {
    j["deadlock_alarm"] = {{"onset_ms", deadlock->onset},
                           {"success_time_ms", deadlock->success_time},
                           {"window_emitters", deadlock->window_emitters},
                           {"lack_of_progress", deadlock->lack_of_progress}};
  } else {
    j["deadlock_alarm"] = nullptr;
  }
  j["anomalies"] = anomalies;
  return j.dump(2) + "\n";
}

std::string traffic_cdf_csv(const std::vector<TelemetrySample>& telemetry) {
  std::map<std::int64_t, std::uint64_t> per_second;
  std::uint64_t total = 0;
  for (const TelemetrySample& s : telemetry) {
    per_second[s.t] += s.bytes;
    total += s.bytes;
  }
  std::ostringstream out;
  out << "t,bytes,cumulative_fraction\n";
  std::uint64_t running = 0;
  for (const auto& [t, bytes] : per_second) {
    running += bytes;
    char frac[32];
    std::snprintf(frac, sizeof frac, "%.6f",
                  total == 0 ? 0.0 : static_cast<double>(running) / static_cast<double>(total));
    out << t << ',' << bytes << ',' << frac << '\n';
  }
  return out.str();
}

std::string error_cdf_csv(const std::vector<LogRecord>& records) {
  std::map<std::string, std::map<std::int64_t, std::size_t>> per_type;
  std::map<std::string, std::size_t> totals;
  for (const LogRecord& r : records) {
    if (r.source != LogSource::HW) continue;
    ++per_type[r.event_type][r.epoch_ms / 1000];
    ++totals[r.event_type];
  }
  std::ostringstream out;
  out << "t,event_type,count,cumulative_fraction\n";
  for (const auto& [type, series] : per_type) {
    std::size_t running = 0;
    for (const auto& [t, count] : series) {
      running += count;
      char frac[32];
      std::snprintf(frac, sizeof frac, "%.6f",
                    static_cast<double>(running) / static_cast<double>(totals[type]));
      out << t << ',' << type << ',' << count << ',' << frac << '\n';
    }
  }
  return out.str();
}

}  // namespace faultlab
