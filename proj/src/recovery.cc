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

#include "faultlab/recovery.h"

#include <algorithm>
#include <set>
#include <string>

namespace faultlab {

std::string_view to_string(RecoveryPhase p) {
  static constexpr std::array<std::string_view, kRecoveryPhases> kNames = {
      "aggregating", "quiesce", "route_compute", "route_install", "unquiesce"};
  return kNames[static_cast<int>(p)];
}

std::string_view to_string(ProcedureKind k) {
  return k == ProcedureKind::Automatic ? "automatic" : "warm_swap";
}

std::string_view to_string(Outcome o) {
  static constexpr std::array<std::string_view, 4> kNames = {"pending", "success", "aborted",
                                                             "failed"};
  return kNames[static_cast<int>(o)];
}

std::string_view to_string(FailureReason r) {
  static constexpr std::array<std::string_view, 4> kNames = {
      "none", "new_failure_during_recovery", "reroute_failure", "warm_swap_error"};
  return kNames[static_cast<int>(r)];
}

std::string RecoveryFsm::cname_list(const std::vector<LinkId>& links) const {
  std::string out;
  for (LinkId l : links) out += " " + topo_.link_cname(l);
  return out;
}

RecoveryFsm::RecoveryFsm(Kernel& kernel, const Topology& topo, FabricState& fabric,
                         const Emitter& emitter, RecoveryHost& host, RecoveryTimings timings)
    : kernel_(kernel),
      topo_(topo),
      fabric_(fabric),
      emitter_(emitter),
      host_(host),
      timings_(timings) {}

std::optional<RecoveryPhase> RecoveryFsm::phase() const {
  if (!current_) return std::nullopt;
  const auto& p = procedures_[*current_];
  for (int i = kRecoveryPhases - 1; i >= 0; --i) {
    if (p.phase_start[i]) return static_cast<RecoveryPhase>(i);
  }
  return RecoveryPhase::Aggregating;
}

void RecoveryFsm::log(std::string_view type, Severity severity, std::string cname,
                      std::string message) {
  host_.emit(emitter_.record(kernel_.now(), LogSource::SMW, severity, type, std::move(cname),
                             std::move(message)));
}

void RecoveryFsm::on_failure_report(LinkId link) {
  const SimTime now = kernel_.now();
  log(event::kFailureDetected, Severity::Warning, topo_.link_cname(link),
      "Received link failure report for " + topo_.link_cname(link));

  if (!current_) {
    open({link}, now);
    return;
  }
  RecoveryProcedure& p = proc(*current_);
  if (phase() == RecoveryPhase::Aggregating) {
    auto it = std::lower_bound(p.trigger.begin(), p.trigger.end(), link);
    if (it == p.trigger.end() || *it != link) p.trigger.insert(it, link);
    return;
  }

  p.outcome = Outcome::Aborted;
  p.reason = FailureReason::NewFailureDuringRecovery;
  p.end = now;
  log(event::kRecoveryAborted, Severity::Error, "-",
      "Aborting network recovery " + std::to_string(p.id) +
          ": additional failure detected during recovery");
  log(event::kLinkRecoveryFailed, Severity::Error, "-",
      "Link recovery failed for procedure " + std::to_string(p.id));
  std::vector<LinkId> trigger = p.trigger;
  auto it = std::lower_bound(trigger.begin(), trigger.end(), link);
  if (it == trigger.end() || *it != link) trigger.insert(it, link);
  SimTime first = p.first_report;
  current_.reset();
  open(std::move(trigger), first);
}

void RecoveryFsm::open(std::vector<LinkId> trigger, SimTime first_report) {
  RecoveryProcedure p;
  p.id = static_cast<std::uint32_t>(procedures_.size());
  p.kind = ProcedureKind::Automatic;
  p.trigger = std::move(trigger);
  p.first_report = first_report;
  p.phase_start[static_cast<int>(RecoveryPhase::Aggregating)] = kernel_.now();
  procedures_.push_back(std::move(p));
  current_ = procedures_.back().id;
  const std::uint32_t id = *current_;
  log(event::kRecoveryStart, Severity::Info, "-",
      "Starting automatic network recovery " + std::to_string(id) + " for failed links" +
          cname_list(procedures_.back().trigger));
  kernel_.schedule(kernel_.now() + timings_.aggregation_window, EventKind::RecoveryPhase,
                   [this, id] { begin_quiesce(id); });
}

void RecoveryFsm::begin_quiesce(std::uint32_t id) {
  if (!is_current(id)) return;
  proc(id).phase_start[static_cast<int>(RecoveryPhase::Quiesce)] = kernel_.now();
  if (!holding_quiesce_) {
    host_.hold_quiesce(true);
    holding_quiesce_ = true;
  }
  log(event::kQuiesce, Severity::Info, "-", "Quiescing high speed network");
  kernel_.schedule(kernel_.now() + timings_.quiesce, EventKind::RecoveryPhase,
                   [this, id] { begin_compute(id); });
}

void RecoveryFsm::mask_link(LinkId link) { fabric_.mask_link(link); }

int RecoveryFsm::failed_asics(const std::vector<LinkId>& links) const {
  std::set<RouterId> dead;
  for (LinkId l : links) {
    for (const LinkEndpoint& e : topo_.link(l).ends) {
      if (!fabric_.router_alive(e.router)) dead.insert(e.router);
    }
  }
  return static_cast<int>(dead.size());
}

void RecoveryFsm::begin_compute(std::uint32_t id) {
  if (!is_current(id)) return;
  RecoveryProcedure& p = proc(id);
  p.phase_start[static_cast<int>(RecoveryPhase::RouteCompute)] = kernel_.now();
  // Links whose connection survives are masked; a connection that lost its
  // last link is left Down and routed around.
  for (LinkId l : p.trigger) {
    if (fabric_.link_state(l) != LinkState::Down) continue;
    try {
      mask_link(l);
    } catch (const LastLink&) {
    }
  }
  log(event::kRerouteStart, Severity::Info, "-", "Computing new routes");
  SimTime duration =
      timings_.route_compute + timings_.per_failed_asic * failed_asics(p.trigger);
  kernel_.schedule(kernel_.now() + duration, EventKind::RecoveryPhase,
                   [this, id] { finish_compute(id); });
}

void RecoveryFsm::finish_compute(std::uint32_t id) {
  if (!is_current(id)) return;
  RecoveryProcedure& p = proc(id);
  std::shared_ptr<RouteTable> table;
  try {
    table = std::make_shared<RouteTable>(compute_routes(topo_, fabric_));
  } catch (const UnroutableError& e) {
    p.outcome = Outcome::Failed;
    p.reason = FailureReason::RerouteFailure;
    p.end = kernel_.now();
    log(event::kRecoveryFailed, Severity::Error, "-",
        "Network recovery " + std::to_string(id) + " failed: failure during route computation");
    log(event::kLinkRecoveryFailed, Severity::Error, "-",
        "Link recovery failed for procedure " + std::to_string(id));
    current_.reset();
    release_quiesce();
    return;
  }
  p.phase_start[static_cast<int>(RecoveryPhase::RouteInstall)] = kernel_.now();
  log(event::kRerouteDone, Severity::Info, "-", "Route computation complete");
  kernel_.schedule(kernel_.now() + timings_.route_install, EventKind::RecoveryPhase,
                   [this, id, table] { finish_install(id, table); });
}

void RecoveryFsm::finish_install(std::uint32_t id, std::shared_ptr<RouteTable> table) {
  if (!is_current(id)) return;
  host_.install_routes(*table);
  proc(id).phase_start[static_cast<int>(RecoveryPhase::Unquiesce)] = kernel_.now();
  log(event::kRoutesInstalled, Severity::Info, "-", "Dispatching new routes to all ASICs");
  kernel_.schedule(kernel_.now() + timings_.unquiesce, EventKind::RecoveryPhase,
                   [this, id] { finish(id); });
}

void RecoveryFsm::finish(std::uint32_t id) {
  if (!is_current(id)) return;
  RecoveryProcedure& p = proc(id);
  p.outcome = Outcome::Success;
  p.end = kernel_.now();
  current_.reset();
  release_quiesce();
  log(event::kUnquiesce, Severity::Info, "-", "Unquiescing high speed network");
  log(event::kRecoverySuccess, Severity::Info, "-",
      "Network recovery " + std::to_string(id) + " completed successfully");
  log(event::kLinkRecoverySuccess, Severity::Info, "-",
      "Link recovery success for procedure " + std::to_string(id));
}

void RecoveryFsm::release_quiesce() {
  if (!holding_quiesce_) return;
  holding_quiesce_ = false;
  host_.hold_quiesce(false);
}

void RecoveryFsm::start_warm_swap(WarmSwapRequest request) {
  auto req = std::make_shared<WarmSwapRequest>(std::move(request));
  RecoveryProcedure p;
  p.id = static_cast<std::uint32_t>(procedures_.size());
  p.kind = ProcedureKind::WarmSwap;
  p.trigger = req->links;
  std::sort(p.trigger.begin(), p.trigger.end());
  p.trigger.erase(std::unique(p.trigger.begin(), p.trigger.end()), p.trigger.end());
  p.first_report = kernel_.now();
  procedures_.push_back(std::move(p));
  const std::uint32_t id = procedures_.back().id;
  log(event::kWarmSwapStart, Severity::Info, "-",
      "Warm swap started for links" + cname_list(procedures_.back().trigger));

  auto phase_at = [this, id](RecoveryPhase ph) {
    proc(id).phase_start[static_cast<int>(ph)] = kernel_.now();
  };
  auto fail = [this, id, req] {
    RecoveryProcedure& w = proc(id);
    w.outcome = Outcome::Failed;
    w.reason = FailureReason::WarmSwapError;
    w.end = kernel_.now();
    log(event::kWarmSwapFailed, Severity::Error, "-",
        "Warm swap failed during link initialization");
    if (req->done) req->done(false);
  };

  SimTime t = kernel_.now() + timings_.warm_swap_link_init;
  if (req->fail) {
    kernel_.schedule(t, EventKind::RecoveryPhase, fail);
    return;
  }
  kernel_.schedule(t, EventKind::RecoveryPhase, [this, phase_at] {
    phase_at(RecoveryPhase::Quiesce);
    host_.hold_quiesce(true);
    log(event::kQuiesce, Severity::Info, "-", "Quiescing high speed network");
  });
  t += timings_.quiesce;
  kernel_.schedule(t, EventKind::RecoveryPhase, [this, phase_at, req] {
    phase_at(RecoveryPhase::RouteCompute);
    for (RouterId r : req->routers) fabric_.restore_router(r);
    for (LinkId l : req->links) {
      bool ends_alive = fabric_.router_alive(topo_.link(l).ends[0].router) &&
                        fabric_.router_alive(topo_.link(l).ends[1].router);
      if (ends_alive) fabric_.restore_link(l);
    }
    log(event::kRerouteStart, Severity::Info, "-", "Computing new routes");
  });
  t += timings_.route_compute;
  auto table = std::make_shared<std::optional<RouteTable>>();
  kernel_.schedule(t, EventKind::RecoveryPhase, [this, phase_at, table] {
    phase_at(RecoveryPhase::RouteInstall);
    try {
      *table = compute_routes(topo_, fabric_);
    } catch (const UnroutableError&) {
      table->reset();
    }
    log(event::kRerouteDone, Severity::Info, "-", "Route computation complete");
  });
  t += timings_.route_install;
  kernel_.schedule(t, EventKind::RecoveryPhase, [this, phase_at, table] {
    if (*table) host_.install_routes(**table);
    phase_at(RecoveryPhase::Unquiesce);
    log(event::kRoutesInstalled, Severity::Info, "-", "Dispatching new routes to all ASICs");
  });
  t += timings_.unquiesce;
  kernel_.schedule(t, EventKind::RecoveryPhase, [this, id, req] {
    RecoveryProcedure& w = proc(id);
    w.outcome = Outcome::Success;
    w.end = kernel_.now();
    host_.hold_quiesce(false);
    log(event::kUnquiesce, Severity::Info, "-", "Unquiescing high speed network");
    log(event::kWarmSwapSuccess, Severity::Info, "-", "Warm swap completed successfully");
    if (req->done) req->done(true);
  });
}

}  // namespace faultlab
