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

// Runs the acceptance criteria and prints one PASS/FAIL line for each.

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "faultlab/analyzer.h"
#include "faultlab/cli.h"
#include "faultlab/hpcarrow.h"
#include "faultlab/patterns.h"
#include "faultlab/routing.h"
#include "oracles.h"

namespace fs = std::filesystem;
using namespace faultlab;

namespace {

const std::vector<std::string> kCampaigns = {"nf_single", "lf_single", "lf_with_restore",
                                             "scf_fast",  "scf_slow",  "2cf_ok",
                                             "2cf_deadlock", "bf_single"};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path source_dir() { return FAULTLAB_SOURCE_DIR; }

Campaign load(const std::string& name) {
  return parse_campaign(slurp(source_dir() / "campaigns" / (name + ".json")));
}

struct Verdict {
  bool ok = true;
  std::string detail;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const RecoveryProcedure* only_automatic(const ExperimentArtifacts& a, std::size_t* count) {
  const RecoveryProcedure* found = nullptr;
  *count = 0;
  for (const auto& p : a.procedures) {
    if (p.kind != ProcedureKind::Automatic) continue;
    ++*count;
    found = &p;
  }
  return found;
}

// Samples whose second falls in [from, to) of simulated time.
std::size_t samples_between(const ExperimentArtifacts& a, SimTime from, SimTime to) {
  std::size_t n = 0;
  for (const auto& s : a.telemetry) {
    SimTime t = (s.t - a.epoch_start) * kSecond;
    if (t >= from && t < to) ++n;
  }
  return n;
}

Verdict criterion1() {
  Verdict v;
  auto t0 = std::chrono::steady_clock::now();
  Topology t({16, 12, 24});
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  double mb = static_cast<double>(ru.ru_maxrss) / 1024.0;
  v.check(t.router_count() == 4608, "routers");
  v.check(t.blade_count() == 2304, "blades");
  v.check(t.node_count() == 9216, "nodes");
  v.check(t.link_count() == 92160, "links");
  // Recount links by endpoint enumeration.
  std::size_t endpoints = 0;
  for (const Router& r : t.routers()) endpoints += r.links.size();
  v.check(endpoints / 2 == t.link_count(), "endpoint enumeration");
  v.check(secs < 5.0, "build time");
  v.check(mb < 1024.0, "memory");
  v.detail = fmt("4608/2304/9216/92160 built in %.3f s, peak RSS %.0f MB", secs, mb) +
             (v.detail.empty() ? "" : " [" + v.detail + "]");
  return v;
}

Verdict criterion2() {
  Verdict v;
  Campaign c = load("lf_single");
  Topology topo(c.dims);
  auto a = run_campaign(c, topo);
  std::size_t n = 0;
  const RecoveryProcedure* p = only_automatic(a, &n);
  v.check(n == 1 && p, "expected exactly 1 procedure");
  if (!p) return v;
  v.check(p->outcome == Outcome::Success, "outcome");
  v.check(p->duration() == 50 * kSecond, fmt("duration %lld ms", (long long)p->duration()));
  SimTime q = *p->phase_start[static_cast<int>(RecoveryPhase::Quiesce)];
  SimTime qe = *p->phase_start[static_cast<int>(RecoveryPhase::RouteCompute)];
  v.check(qe - q == 30 * kSecond, "quiesce length");
  v.check(samples_between(a, q, qe) == 0, "samples during quiesce");
  v.check(samples_between(a, 0, q) > 0 && samples_between(a, *p->end, a.end + 1) > 0,
          "telemetry missing around the gap");

  Campaign r = load("lf_with_restore");
  auto b = run_campaign(r, topo);
  const RecoveryProcedure* ws = nullptr;
  for (const auto& x : b.procedures)
    if (x.kind == ProcedureKind::WarmSwap) ws = &x;
  v.check(ws && ws->outcome == Outcome::Success, "warm swap missing or failed");
  if (!ws) return v;
  SimTime wd = ws->duration();
  v.check(wd >= 88 * kSecond && wd <= 92 * kSecond, fmt("warm swap %lld ms", (long long)wd));
  SimTime wq = *ws->phase_start[static_cast<int>(RecoveryPhase::Quiesce)];
  v.check(samples_between(b, wq, *ws->end) == 0, "samples during warm swap quiesce");
  v.check(samples_between(b, *ws->end, b.end + 1) > 0, "no telemetry after warm swap");
  if (v.ok) {
    v.detail = fmt("LF: 1 procedure, Success, %lld s, quiesce %lld s with 0 samples; "
                   "warm swap %lld s with its own gap",
                   (long long)(p->duration() / kSecond), (long long)((qe - q) / kSecond),
                   (long long)(wd / kSecond));
  }
  return v;
}

Verdict criterion3() {
  Verdict v;
  Campaign fast = load("scf_fast");
  Topology topo(fast.dims);
  auto a = run_campaign(fast, topo);
  std::size_t n = 0;
  only_automatic(a, &n);
  v.check(n == 1, fmt("scf_fast has %zu procedures", n));
  std::vector<SimTime> injected;
  for (const auto& r : a.log)
    if (r.event_type == event::kInject) injected.push_back(r.epoch_ms);
  v.check(injected.size() == 8 && injected.back() - injected.front() <= 3 * kSecond,
          "scf_fast is not 8 links within 3 s");

  auto b = run_campaign(load("scf_slow"), topo);
  std::vector<const RecoveryProcedure*> autos;
  for (const auto& p : b.procedures)
    if (p.kind == ProcedureKind::Automatic) autos.push_back(&p);
  v.check(autos.size() >= 2, "scf_slow has fewer than 2 procedures");
  bool chained = false;
  for (std::size_t i = 0; i + 1 < autos.size(); ++i) {
    if (autos[i]->outcome != Outcome::Aborted) continue;
    const auto& pre = autos[i]->trigger;
    const auto& post = autos[i + 1]->trigger;
    bool superset = std::includes(post.begin(), post.end(), pre.begin(), pre.end());
    if (superset && post.size() > pre.size()) chained = true;
  }
  v.check(chained, "no aborted procedure with a strictly larger successor trigger");
  v.check(!autos.empty() && autos.back()->outcome == Outcome::Success, "terminal not Success");
  std::size_t aborted = 0;
  for (auto* p : autos) aborted += p->outcome == Outcome::Aborted;
  if (v.ok) v.detail = fmt("fast: 1 procedure; slow: %zu procedures, %zu aborted, last Success",
                           autos.size(), aborted);
  return v;
}

Verdict criterion4() {
  Verdict v;
  std::size_t checked = 0;
  for (TorusDims dims : {TorusDims{4, 4, 4}, TorusDims{16, 12, 24}}) {
    Topology t(dims);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      auto [a, b] = pick_2cf_targets(t, seed);
      const BladeRef& ba = t.blade(t.router(a.router).blade).ref;
      const BladeRef& bb = t.blade(t.router(b.router).blade).ref;
      std::set<RouterId> routers{a.router, t.peer(a.router, a.dir), b.router,
                                 t.peer(b.router, b.dir)};
      bool ok = ba.x != bb.x && ba.y != bb.y && ba.index != bb.index && routers.size() == 4 &&
                dimension_of(a.dir) != dimension_of(b.dir);
      v.check(ok, fmt("seed %llu on %s", (unsigned long long)seed, dims.to_string().c_str()));
      ++checked;
    }
  }
  if (v.ok) v.detail = fmt("%zu/%zu seeds pass on 4x4x4 and 16x12x24", checked, checked);
  return v;
}

Verdict criterion5() {
  Verdict v;
  Campaign c = load("bf_single");
  Topology topo(c.dims);
  auto a = run_campaign(c, topo);
  std::int64_t inject = -1;
  std::map<std::int64_t, std::size_t> groups;
  for (const auto& r : a.log) {
    if (r.event_type == event::kInject && inject < 0) inject = r.epoch_ms;
    if (r.event_type == event::kFailureDetected) ++groups[r.epoch_ms];
  }
  std::size_t reports = 0;
  for (auto& [t, n] : groups) {
    reports += n;
    v.check(t >= inject && t - inject <= 2000, "report outside 2 s of injection");
  }
  v.check(reports == 72, fmt("%zu reports", reports));
  v.check(groups.size() == 2 && groups.begin()->second == 36 && groups.rbegin()->second == 36,
          "not two groups of 36");
  std::size_t n = 0;
  const RecoveryProcedure* p = only_automatic(a, &n);
  v.check(n == 1 && p && p->outcome == Outcome::Success, fmt("%zu procedures", n));
  if (!p || !p->end) return v;
  SimTime q = *p->phase_start[static_cast<int>(RecoveryPhase::Quiesce)];
  SimTime down = *p->end - q;
  v.check(down >= 58 * kSecond && down <= 78 * kSecond, fmt("unavailable %lld ms", (long long)down));
  if (v.ok) v.detail = fmt("72 reports in 2x36 within %lld ms; 1 procedure; network unavailable %lld s",
                           (long long)(groups.rbegin()->first - inject), (long long)(down / kSecond));
  return v;
}

Verdict criterion6() {
  Verdict v;
  Campaign c = load("2cf_deadlock");
  Topology topo(c.dims);
  auto a = run_campaign(c, topo);
  const RecoveryProcedure* last = nullptr;
  for (const auto& p : a.procedures)
    if (p.kind == ProcedureKind::Automatic) last = &p;
  v.check(last && last->outcome == Outcome::Success, "recovery did not report Success");
  if (!last || !last->end) return v;
  std::int64_t success_ms = a.epoch_start * 1000 + *last->end;

  std::size_t after = 0, nonzero = 0;
  for (const auto& s : a.telemetry) {
    if (s.t * 1000 < success_ms) continue;
    ++after;
    nonzero += s.bytes != 0;
  }
  v.check(after > 0 && nonzero == 0, fmt("%zu of %zu samples after success carry traffic",
                                         nonzero, after));

  // Distinct ORB emitters per 60 s window after the success, counted here
  // rather than taken from the detector.
  std::map<std::int64_t, std::set<std::string>> windows;
  for (const auto& r : a.log) {
    if (r.epoch_ms < success_ms || !is_orb_scrub(r.event_type)) continue;
    windows[(r.epoch_ms - success_ms) / 60000].insert(r.cname);
  }
  std::size_t rises = 0;
  for (std::int64_t w = 1; windows.count(w) && windows.count(w - 1); ++w) {
    if (windows[w].size() <= windows[w - 1].size()) break;
    ++rises;
  }
  v.check(rises >= 3, fmt("only %zu consecutive rises", rises));

  SimTime swap_at = -1, inject_at = c.injections.front().at;
  for (const auto& r : c.restorations)
    if (r.cmd == RestoreCommand::LR) swap_at = r.at;
  v.check(swap_at - inject_at == 24 * 60 * kSecond, "warm swap is not scripted at +24 min");
  auto alarm = detect_deadlock(a.log);
  v.check(alarm.has_value(), "no DeadlockAlarm");
  if (alarm) {
    v.check(alarm->onset < a.epoch_start * 1000 + swap_at, "alarm after the warm swap");
  }
  std::size_t hung = 0, killed = 0;
  for (const auto& j : a.jobs) {
    hung += j.status == JobStatus::Hung;
    killed += j.status == JobStatus::Killed;
  }
  v.check(hung == a.jobs.size() && killed == 0 && hung > 0, "jobs not all Hung");
  if (v.ok) {
    v.detail = fmt("Success then 0 traffic in %zu samples; emitters rise %zu windows; alarm %lld s "
                   "after success, %lld s before warm swap; %zu jobs Hung",
                   after, rises, (long long)((alarm->onset - success_ms) / 1000),
                   (long long)((a.epoch_start * 1000 + swap_at - alarm->onset) / 1000), hung);
  }
  return v;
}

Verdict criterion7() {
  Verdict v;
  fs::path dir = source_dir() / "tests" / "fixtures" / "exp5";
  ParsedLog log = parse_log(slurp(dir / "events.log"));
  ExperimentReport r = build_report(log, {}, summarize_jobs(slurp(dir / "jobs.csv")));
  v.check(r.recovery_time_s == 630, fmt("recovery time %lld", (long long)r.recovery_time_s));
  v.check(r.procedures == 4 && r.success == 2 && r.failure == 2, "procedures");
  v.check(r.link_failed == 32, "gemini link failed");
  v.check(r.channel_failed == 32, "gemini channel failed");
  v.check(r.link_recovery_success == 4, "link recovery success");
  v.check(r.application_errors == 1, "application errors");
  v.check(!r.admin_console_errors, "errors on admin console");
  v.check(r.scenario == "SCF (Random)" && r.experiment_id == "5", "identity");
  if (v.ok) v.detail = "630 s, 4 (2/2), 32/32, 4, 1, No";
  return v;
}

Verdict criterion8() {
  Verdict v;
  std::size_t runs = 0, procs = 0;
  for (const std::string& name : kCampaigns) {
    Campaign base = load(name);
    Topology topo(base.dims);
    for (std::uint64_t i = 0; i < 5; ++i) {
      Campaign c = base;
      c.seed = base.seed + i;
      auto a = run_campaign(c, topo);
      Reconstruction rc = reconstruct_recoveries(parse_log(a.events_text()).records);
      ++runs;
      std::string tag = name + " seed " + std::to_string(c.seed);
      if (rc.procedures.size() != a.procedures.size()) {
        v.check(false, tag + " count");
        continue;
      }
      for (std::size_t k = 0; k < a.procedures.size(); ++k) {
        const auto& truth = a.procedures[k];
        const auto& seen = rc.procedures[k];
        ++procs;
        v.check(seen.kind == truth.kind, tag + " kind");
        v.check(seen.outcome == truth.outcome, tag + " outcome");
        v.check(std::llabs(seen.duration_ms() - truth.duration()) <= 1000, tag + " duration");
      }
      v.check(rc.anomalies.empty(), tag + " anomalies");
    }
  }
  if (v.ok) v.detail = fmt("%zu runs, %zu procedures agree", runs, procs);
  return v;
}

Verdict criterion9() {
  Verdict v;
  std::size_t pairs = 0;
  // Four is the smallest legal extent, so (4,4,4) is the only torus in scope.
  {
    const TorusDims dims{4, 4, 4};
    Topology t(dims);
    FabricState healthy(t);
    RouteTable table = compute_routes(t, healthy);
    for (RouterId s = 0; s < t.router_count(); ++s) {
      auto dist = oracle::bfs(t, healthy, s);
      for (RouterId d = 0; d < t.router_count(); ++d) {
        auto path = path_of(table, s, d);
        ++pairs;
        bool ok = static_cast<int>(path.size()) == dist[d];
        for (const Hop& h : path) {
          ok &= dimension_order_hop(dims, t.router(h.router).coord, t.router(d).coord) == h.dir;
        }
        v.check(ok, "healthy path");
      }
    }
    std::mt19937_64 rng(99);
    std::size_t disconnected = 0;
    for (int trial = 0; trial < 50; ++trial) {
      FabricState f(t);
      int cuts = 1 + static_cast<int>(rng() % 10);
      // Every fifth set also cuts off one router completely.
      if (trial % 5 == 4) {
        auto victim = static_cast<RouterId>(rng() % t.router_count());
        for (Direction d : kAllDirections) oracle::fail_connection(t, f, victim, d);
      }
      for (int i = 0; i < cuts; ++i) {
        oracle::fail_connection(t, f, static_cast<RouterId>(rng() % t.router_count()),
                                kAllDirections[rng() % 6]);
      }
      bool conn = oracle::connected(t, f);
      try {
        RouteTable ft = compute_routes(t, f);
        v.check(conn, "routes computed on a disconnected graph");
        for (RouterId s = 0; s < t.router_count(); ++s) {
          auto dist = oracle::bfs(t, f, s);
          for (RouterId d = 0; d < t.router_count(); ++d) {
            ++pairs;
            v.check(static_cast<int>(path_of(ft, s, d).size()) == dist[d], "faulted path");
          }
        }
      } catch (const UnroutableError&) {
        ++disconnected;
        v.check(!conn, "UnroutableError on a connected graph");
      }
    }
    v.check(disconnected > 0, "no fault set disconnected the graph");
    if (v.ok) v.detail = fmt("%zu pairs match the oracle; %zu of 50 fault sets disconnected",
                             pairs, disconnected);
  }
  return v;
}

Verdict criterion10() {
  Verdict v;
  Dictionary dict = Dictionary::parse(slurp(source_dir() / "data" / "dictionary.txt"));
  Pattern aries = extract_pattern(
      "found_critical_aries_error: handling failed PT c11-8c1s3a0n0 (blade c11-8c1s3)", dict);
  v.check(aries.text() == "found_critical_aries_error: handling failed \xE2\x80\xA2 "
                          "\xE2\x80\xA2-\xE2\x80\xA2 (blade \xE2\x80\xA2-\xE2\x80\xA2)",
          "Aries example: " + aries.text());

  std::vector<std::string> corpus;
  std::vector<std::string> deadlock;
  for (const std::string& name : kCampaigns) {
    Campaign c = load(name);
    Topology topo(c.dims);
    auto a = run_campaign(c, topo);
    for (const auto& r : a.log) {
      if (name == "2cf_deadlock") deadlock.push_back(r.message);
      if (corpus.size() < 10000) corpus.push_back(r.message);
    }
  }
  v.check(corpus.size() == 10000, fmt("corpus has %zu lines", corpus.size()));
  auto patterns = mine_patterns(corpus, dict);
  std::size_t total = 0;
  for (const Pattern& p : patterns) {
    total += p.count;
    v.check(extract_pattern(p.text(), dict).text() == p.text(), "not idempotent: " + p.text());
  }
  v.check(total == corpus.size(), "pattern counts do not sum to the corpus");
  std::size_t meta_total = 0;
  for (const MetaPattern& m : aggregate(patterns, &dict)) meta_total += m.count;
  v.check(meta_total == corpus.size(), "meta-pattern counts do not sum to the corpus");

  auto dp = mine_patterns(deadlock, dict);
  auto dm = aggregate(dp, &dict);
  v.check(dm.size() < dp.size(), fmt("deadlock corpus %zu meta vs %zu patterns", dm.size(),
                                     dp.size()));
  if (v.ok) v.detail = fmt("Aries exact; 10000 lines -> %zu patterns, conserved; deadlock "
                           "corpus %zu meta < %zu patterns",
                           patterns.size(), dm.size(), dp.size());
  return v;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "faultlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict criterion11(std::chrono::steady_clock::time_point started) {
  Verdict v;
  fs::path root = fs::temp_directory_path() / "faultlab_acceptance";
  fs::remove_all(root);
  for (const std::string& name : kCampaigns) {
    fs::path dir = root / name;
    std::string campaign = (source_dir() / "campaigns" / (name + ".json")).string();
    v.check(cli({"run", campaign, "--out", dir.string()}) == kExitOk, name + " run");
    v.check(cli({"replay", dir.string()}) == kExitOk, name + " replay differs");
    // A second independent run must match byte for byte as well.
    fs::path again = root / (name + "_again");
    cli({"run", campaign, "--out", again.string()});
    v.check(slurp(dir / "events.log") == slurp(again / "events.log") &&
                slurp(dir / "telemetry.csv") == slurp(again / "telemetry.csv"),
            name + " rerun differs");
  }
  fs::remove_all(root);
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  v.check(secs < 300.0, fmt("acceptance took %.1f s", secs));
  if (v.ok) v.detail = fmt("%zu campaigns replay byte-identical; acceptance run %.1f s",
                           kCampaigns.size(), secs);
  return v;
}

}  // namespace

int main() {
  auto started = std::chrono::steady_clock::now();
  std::vector<std::function<Verdict()>> criteria = {
      criterion1, criterion2, criterion3, criterion4, criterion5, criterion6,
      criterion7, criterion8, criterion9, criterion10,
      [started] { return criterion11(started); }};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.ok;
    std::printf("%s %zu: %s\n", v.ok ? "PASS" : "FAIL", i + 1, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
