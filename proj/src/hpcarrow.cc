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

#include "faultlab/hpcarrow.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "faultlab/routing.h"
#include "json.hpp"

namespace faultlab {

using json = nlohmann::json;

namespace {

constexpr std::string_view kRandom = "Random";
constexpr std::string_view kInjected = "injected";

constexpr std::array<std::string_view, 6> kInjectNames = {"NF", "LF",  "SCF",
                                                          "2CF", "BF", "RouteCorrupt"};
constexpr std::array<std::string_view, 2> kRestoreNames = {"LR", "BR"};
constexpr std::array<std::string_view, 3> kFailStepNames = {"remove", "add", "boot"};

template <std::size_t N>
std::optional<std::size_t> index_of(const std::array<std::string_view, N>& names,
                                    std::string_view text) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return i;
  }
  return std::nullopt;
}

struct TimingField {
  const char* key;
  SimTime RecoveryTimings::*member;
};

constexpr std::array<TimingField, 10> kTimingFields = {{
    {"detection_latency_ms", &RecoveryTimings::detection_latency},
    {"aggregation_window_ms", &RecoveryTimings::aggregation_window},
    {"quiesce_ms", &RecoveryTimings::quiesce},
    {"route_compute_ms", &RecoveryTimings::route_compute},
    {"route_install_ms", &RecoveryTimings::route_install},
    {"unquiesce_ms", &RecoveryTimings::unquiesce},
    {"per_failed_asic_ms", &RecoveryTimings::per_failed_asic},
    {"warm_swap_link_init_ms", &RecoveryTimings::warm_swap_link_init},
    {"blade_remove_ms", &RecoveryTimings::blade_remove},
    {"blade_boot_ms", &RecoveryTimings::blade_boot},
}};

// Small typed accessors that report the JSON path of a bad value.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  void only(std::initializer_list<std::string_view> keys) const {
    if (!j_.is_object()) fail("", "expected an object");
    for (const auto& [key, value] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        fail(key, "unknown field");
      }
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  std::int64_t integer(const char* key, std::int64_t min = 0) const {
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    auto n = v.get<std::int64_t>();
    if (n < min) fail(key, "must be at least " + std::to_string(min));
    return n;
  }
  std::uint64_t unsigned_integer(const char* key) const {
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::string string(const char* key) const {
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const char* key) const {
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }
  std::vector<std::string> strings(const char* key) const {
    const json& v = j_.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array()) fail(key, "expected a string or an array of strings");
    std::vector<std::string> out;
    for (const json& e : v) {
      if (!e.is_string()) fail(key, "expected a string or an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  [[noreturn]] void fail(std::string_view key, const std::string& what) const {
    throw CampaignInvalid(key.empty() ? path_ : path(key), what);
  }

 private:
  const json& j_;
  std::string path_;
};

std::string item_path(const char* list, std::size_t i) {
  return std::string(list) + "[" + std::to_string(i) + "]";
}

Injection parse_injection(const json& j, const std::string& path) {
  Reader r(j, path);
  r.only({"at_ms", "cmd", "target", "gap_ms"});
  Injection inj;
  inj.at = r.integer("at_ms");
  auto cmd = index_of(kInjectNames, r.string("cmd"));
  if (!cmd) r.fail("cmd", "unknown command '" + r.string("cmd") + "'");
  inj.cmd = static_cast<InjectCommand>(*cmd);
  if (r.has("target")) {
    inj.targets = r.strings("target");
    if (inj.targets.size() == 1 && inj.targets[0] == kRandom) inj.targets.clear();
  }
  std::size_t want = inj.cmd == InjectCommand::TwoCF ? 2 : 1;
  if (!inj.targets.empty() && inj.targets.size() != want) {
    r.fail("target", "expected " + std::to_string(want) + " target(s)");
  }
  if (r.has("gap_ms")) {
    const json& g = r.at("gap_ms");
    if (g.is_array()) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g[i].is_number_integer() || g[i].get<std::int64_t>() < 0) {
          r.fail("gap_ms", "gaps must be non-negative integers");
        }
        inj.gaps.push_back(g[i].get<SimTime>());
      }
    } else {
      inj.gaps.push_back(r.integer("gap_ms"));
    }
    if (inj.cmd != InjectCommand::SCF && inj.cmd != InjectCommand::TwoCF) {
      r.fail("gap_ms", "only SCF and 2CF take a gap");
    }
  }
  return inj;
}

Restoration parse_restoration(const json& j, const std::string& path) {
  Reader r(j, path);
  r.only({"at_ms", "cmd", "targets", "fail_step"});
  Restoration res;
  res.at = r.integer("at_ms");
  auto cmd = index_of(kRestoreNames, r.string("cmd"));
  if (!cmd) r.fail("cmd", "unknown command '" + r.string("cmd") + "'");
  res.cmd = static_cast<RestoreCommand>(*cmd);
  if (!r.has("targets")) r.fail("targets", "missing");
  res.targets = r.strings("targets");
  if (res.targets.empty()) r.fail("targets", "empty");
  if (res.cmd == RestoreCommand::BR && res.targets.size() != 1) {
    r.fail("targets", "BR restores exactly one blade");
  }
  if (r.has("fail_step") && !r.at("fail_step").is_null()) {
    auto step = index_of(kFailStepNames, r.string("fail_step"));
    if (!step) r.fail("fail_step", "expected remove, add or boot");
    res.fail_step = static_cast<FailStep>(*step);
  }
  return res;
}

ScriptedError parse_scripted(const json& j, const std::string& path) {
  Reader r(j, path);
  r.only({"at_ms", "kind", "target"});
  ScriptedError e;
  e.at = r.integer("at_ms");
  auto kind = parse_hw_event_type(r.string("kind"));
  if (!kind) r.fail("kind", "unknown hardware error '" + r.string("kind") + "'");
  e.kind = *kind;
  e.target = r.string("target");
  return e;
}

std::array<int, 4> workload_field(const Reader& r, const std::array<int, 4>& defaults) {
  std::array<int, 4> out = defaults;
  for (int i = 0; i < 4; ++i) {
    std::string key(to_string(static_cast<ScaleClass>(i)));
    if (r.has(key.c_str())) out[i] = static_cast<int>(r.integer(key.c_str()));
  }
  return out;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string_view to_string(InjectCommand c) { return kInjectNames[static_cast<int>(c)]; }
std::string_view to_string(RestoreCommand c) { return kRestoreNames[static_cast<int>(c)]; }
std::string_view to_string(FailStep s) { return kFailStepNames[static_cast<int>(s)]; }

CampaignInvalid::CampaignInvalid(std::string entry, const std::string& what)
    : std::runtime_error(entry + ": " + what), entry_(std::move(entry)) {}

SimTime Campaign::effective_duration() const {
  if (duration) return *duration;
  SimTime last = 0;
  for (const Injection& inj : injections) {
    SimTime span = 0;
    for (std::size_t i = 0; i + 1 < 8; ++i) {
      if (!inj.gaps.empty()) span += inj.gaps[std::min(i, inj.gaps.size() - 1)];
    }
    last = std::max(last, inj.at + span);
  }
  for (const Restoration& r : restorations) last = std::max(last, r.at);
  for (const ScriptedError& e : scripted_errors) last = std::max(last, e.at);
  return last + 600 * kSecond;
}

Campaign parse_campaign(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw CampaignInvalid("$", e.what());
  }
  Reader r(doc, "");
  r.only({"name", "scenario", "dims", "seed", "duration_ms", "supervision", "start_epoch",
          "flow_rate", "timings", "workload", "injections", "restorations",
          "scripted_errors"});

  Campaign c;
  if (!r.has("name")) r.fail("name", "missing");
  c.name = r.string("name");
  if (c.name.empty() || c.name.find_first_of(" \t\r\n|") != std::string::npos) {
    r.fail("name", "must be non-empty without whitespace or '|'");
  }
  if (r.has("scenario")) c.scenario = r.string("scenario");
  if (c.scenario.find_first_of("\r\n") != std::string::npos) {
    r.fail("scenario", "must be a single line");
  }
  if (r.has("dims")) {
    const json& d = r.at("dims");
    try {
      if (d.is_string()) {
        c.dims = parse_dims(d.get<std::string>());
        validate_dims(c.dims);
      } else if (d.is_array() && d.size() == 3 && d[0].is_number_integer() &&
                 d[1].is_number_integer() && d[2].is_number_integer()) {
        c.dims = TorusDims{d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
        validate_dims(c.dims);
      } else {
        r.fail("dims", "expected [x,y,z] or \"XxYxZ\"");
      }
    } catch (const InvalidDims& e) {
      r.fail("dims", e.what());
    }
  }
  if (r.has("seed")) c.seed = r.unsigned_integer("seed");
  if (r.has("duration_ms")) c.duration = r.integer("duration_ms", 1);
  if (r.has("supervision")) c.supervision = r.boolean("supervision");
  if (r.has("start_epoch")) c.start_epoch = r.integer("start_epoch");
  if (r.has("flow_rate")) c.flow_rate = r.unsigned_integer("flow_rate");

  if (r.has("timings")) {
    Reader t(r.at("timings"), "timings");
    t.only({"detection_latency_ms", "aggregation_window_ms", "quiesce_ms",
            "route_compute_ms", "route_install_ms", "unquiesce_ms", "per_failed_asic_ms",
            "warm_swap_link_init_ms", "blade_remove_ms", "blade_boot_ms"});
    for (const TimingField& f : kTimingFields) {
      if (t.has(f.key)) c.timings.*f.member = t.integer(f.key);
    }
  }

  if (r.has("workload")) {
    Reader w(r.at("workload"), "workload");
    w.only({"nano", "small", "medium", "large", "nodes_per"});
    c.workload.counts = workload_field(w, c.workload.counts);
    if (w.has("nodes_per")) {
      Reader np(w.at("nodes_per"), "workload.nodes_per");
      np.only({"nano", "small", "medium", "large"});
      c.workload.nodes_per = workload_field(np, c.workload.nodes_per);
    }
    for (int i = 0; i < 4; ++i) {
      auto cls = static_cast<ScaleClass>(i);
      int n = c.workload.nodes_per[i];
      if (c.workload.counts[i] > 0 && (n < 1 || classify(static_cast<std::size_t>(n)) != cls)) {
        w.fail("nodes_per", std::to_string(n) + " nodes is not a " +
                                std::string(to_string(cls)) + " job");
      }
    }
  }

  auto list = [&](const char* key, auto parse, auto& out) {
    if (!r.has(key)) return;
    const json& arr = r.at(key);
    if (!arr.is_array()) r.fail(key, "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(parse(arr[i], item_path(key, i)));
  };
  list("injections", parse_injection, c.injections);
  list("restorations", parse_restoration, c.restorations);
  list("scripted_errors", parse_scripted, c.scripted_errors);

  for (std::size_t i = 1; i < c.injections.size(); ++i) {
    if (c.injections[i].at < c.injections[i - 1].at) {
      throw CampaignInvalid(item_path("injections", i) + ".at_ms",
                            "injection times must be non-decreasing");
    }
  }
  return c;
}

std::string campaign_json(const Campaign& c) {
  json doc;
  doc["name"] = c.name;
  doc["scenario"] = c.scenario;
  doc["dims"] = c.dims.to_string();
  doc["seed"] = c.seed;
  if (c.duration) doc["duration_ms"] = *c.duration;
  doc["supervision"] = c.supervision;
  doc["start_epoch"] = c.start_epoch;
  doc["flow_rate"] = c.flow_rate;
  json& timings = doc["timings"];
  for (const TimingField& f : kTimingFields) timings[f.key] = c.timings.*f.member;
  json& workload = doc["workload"];
  for (int i = 0; i < 4; ++i) {
    std::string key(to_string(static_cast<ScaleClass>(i)));
    workload[key] = c.workload.counts[i];
    workload["nodes_per"][key] = c.workload.nodes_per[i];
  }
  doc["injections"] = json::array();
  for (const Injection& inj : c.injections) {
    json e;
    e["at_ms"] = inj.at;
    e["cmd"] = to_string(inj.cmd);
    if (inj.targets.empty()) {
      e["target"] = kRandom;
    } else if (inj.targets.size() == 1) {
      e["target"] = inj.targets[0];
    } else {
      e["target"] = inj.targets;
    }
    if (!inj.gaps.empty()) e["gap_ms"] = inj.gaps;
    doc["injections"].push_back(std::move(e));
  }
  doc["restorations"] = json::array();
  for (const Restoration& res : c.restorations) {
    json e;
    e["at_ms"] = res.at;
    e["cmd"] = to_string(res.cmd);
    e["targets"] = res.targets;
    if (res.fail_step) e["fail_step"] = to_string(*res.fail_step);
    doc["restorations"].push_back(std::move(e));
  }
  doc["scripted_errors"] = json::array();
  for (const ScriptedError& s : c.scripted_errors) {
    doc["scripted_errors"].push_back(
        {{"at_ms", s.at}, {"kind", event_type(s.kind)}, {"target", s.target}});
  }
  return doc.dump(2) + "\n";
}

std::string config_digest(const Campaign& c) { return fnv1a_hex(campaign_json(c)); }

namespace {

template <class F>
void resolve_or_fail(const std::string& path, F&& f) {
  try {
    f();
  } catch (const MalformedCname& e) {
    throw CampaignInvalid(path, e.what());
  } catch (const UnknownComponent& e) {
    throw CampaignInvalid(path, e.what());
  }
}

}  // namespace

void validate_campaign(const Campaign& c, const Topology& topo) {
  if (!(c.dims == topo.dims())) {
    throw CampaignInvalid("dims", "campaign is for " + c.dims.to_string() + ", torus is " +
                                      topo.dims().to_string());
  }
  try {
    generate_workload(c.workload, topo);
  } catch (const std::exception& e) {
    throw CampaignInvalid("workload", e.what());
  }
  for (std::size_t i = 0; i < c.injections.size(); ++i) {
    const Injection& inj = c.injections[i];
    std::string path = item_path("injections", i) + ".target";
    for (const std::string& t : inj.targets) {
      resolve_or_fail(path, [&] {
        ComponentRef ref = parse_cname(t);
        switch (inj.cmd) {
          case InjectCommand::NF:
            topo.resolve_node(ref);
            break;
          case InjectCommand::LF:
          case InjectCommand::SCF:
          case InjectCommand::TwoCF:
            topo.resolve_link_end(ref);
            break;
          case InjectCommand::BF:
            topo.resolve_blade(ref);
            break;
          case InjectCommand::RouteCorrupt:
            topo.resolve_router(ref);
            break;
        }
      });
    }
    if (inj.cmd == InjectCommand::TwoCF && inj.targets.size() == 2) {
      auto a = connection_of(topo, topo.resolve_link_end(parse_cname(inj.targets[0])));
      auto b = connection_of(topo, topo.resolve_link_end(parse_cname(inj.targets[1])));
      auto canon = [&](ConnectionRef c) {
        return is_positive(c.dir) ? c : ConnectionRef{topo.peer(c.router, c.dir), opposite(c.dir)};
      };
      if (canon(a) == canon(b)) {
        throw CampaignInvalid(path, "2CF targets name the same connection");
      }
    }
  }
  for (std::size_t i = 0; i < c.restorations.size(); ++i) {
    const Restoration& res = c.restorations[i];
    std::string path = item_path("restorations", i) + ".targets";
    for (const std::string& t : res.targets) {
      if (t == kInjected) continue;
      resolve_or_fail(path, [&] {
        ComponentRef ref = parse_cname(t);
        if (res.cmd == RestoreCommand::LR) {
          topo.resolve_link_end(ref);
        } else {
          topo.resolve_blade(ref);
        }
      });
    }
  }
  for (std::size_t i = 0; i < c.scripted_errors.size(); ++i) {
    resolve_or_fail(item_path("scripted_errors", i) + ".target",
                    [&] { topo.resolve_router(parse_cname(c.scripted_errors[i].target)); });
  }
}

ConnectionRef connection_of(const Topology& topo, const LinkEndpoint& end) {
  (void)topo;
  return ConnectionRef{end.router, end.direction()};
}

std::vector<ScheduledFailure> inject_connection(const Topology& topo, const FabricState& fabric,
                                                ConnectionRef conn, SimTime at,
                                                std::span<const SimTime> gaps) {
  std::vector<ScheduledFailure> out;
  SimTime t = at;
  for (LinkId l : topo.connection_links(conn.router, conn.dir)) {
    if (fabric.link_state(l) == LinkState::Down) continue;
    if (!out.empty() && !gaps.empty()) {
      t += gaps[std::min(out.size() - 1, gaps.size() - 1)];
    }
    out.push_back({t, l});
  }
  if (out.empty()) {
    throw AlreadyDown("connection " + topo.router_cname(conn.router) + " " +
                      std::string(to_string(conn.dir)) + " is already down");
  }
  return out;
}

std::pair<ConnectionRef, ConnectionRef> pick_2cf_targets(const Topology& topo,
                                                         std::uint64_t seed) {
  const TorusDims& dims = topo.dims();
  const int columns = dims.z / 2;
  Rng rng(seed);
  auto draw = [&](int n) { return static_cast<int>(rng.below(static_cast<std::uint64_t>(n))); };
  // Uniform over ordered blade pairs differing in every coordinate: the
  // second blade's coordinates are offsets 1..n-1 from the first's.
  int ax = draw(dims.x), ay = draw(dims.y), ak = draw(columns);
  int bx = (ax + 1 + draw(dims.x - 1)) % dims.x;
  int by = (ay + 1 + draw(dims.y - 1)) % dims.y;
  int bk = (ak + 1 + draw(columns - 1)) % columns;
  Coord a{ax, ay, 2 * ak + draw(2)};
  Coord b{bx, by, 2 * bk + draw(2)};
  auto da = kAllDirections[static_cast<std::size_t>(draw(6))];
  // Any direction outside A's dimension.
  int pick = draw(4);
  Direction db = Direction::XPlus;
  for (Direction d : kAllDirections) {
    if (dimension_of(d) == dimension_of(da)) continue;
    if (pick-- == 0) {
      db = d;
      break;
    }
  }
  return {ConnectionRef{topo.router_at(a), da}, ConnectionRef{topo.router_at(b), db}};
}

void check_restorable(const FabricState& fabric, std::span<const LinkId> links) {
  for (LinkId l : links) {
    if (fabric.link_state(l) == LinkState::Up) {
      throw RestoreOnHealthy("link " + fabric.topology().link_cname(l) + " is up");
    }
  }
}

std::vector<LinkId> blade_links(const Topology& topo, BladeId blade) {
  std::vector<LinkId> out;
  for (RouterId r : topo.blade(blade).asics) {
    const auto& links = topo.router(r).links;
    out.insert(out.end(), links.begin(), links.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string ExperimentArtifacts::events_text() const {
  std::string out = header;
  for (const LogRecord& r : log) {
    out += r.to_line();
    out += '\n';
  }
  return out;
}

namespace {

std::string default_scenario(const Campaign& c) {
  if (!c.scenario.empty()) return c.scenario;
  if (c.injections.empty()) return "none";
  const Injection& first = c.injections.front();
  std::string s(to_string(first.cmd));
  if (first.targets.empty()) s += " (Random)";
  return s;
}

class Experiment final : public RecoveryHost {
 public:
  Experiment(const Campaign& c, const Topology& topo)
      : c_(c),
        topo_(topo),
        fabric_(topo),
        emitter_(topo, EmitterConfig{.epoch_start = c.start_epoch}),
        rng_(c.seed),
        fsm_(kernel_, topo, fabric_, emitter_, *this, c.timings),
        table_(compute_routes(topo, fabric_)),
        end_(c.effective_duration()) {}

  ExperimentArtifacts run();

  void emit(LogRecord record) override { log_.push_back(std::move(record)); }
  void hold_quiesce(bool on) override;
  void install_routes(RouteTable table) override;

 private:
  void log(LogSource source, Severity severity, std::string_view type, std::string cname,
           std::string message) {
    emit(emitter_.record(kernel_.now(), source, severity, type, std::move(cname),
                         std::move(message)));
  }
  void console_error(std::string cname, std::string message) {
    log(LogSource::CONSOLE, Severity::Error, event::kConsoleError, std::move(cname),
        std::move(message));
  }
  void command(std::string text) {
    log(LogSource::CONSOLE, Severity::Info, event::kCommand, "-", std::move(text));
  }
  bool quiesced() const { return holds_ > 0; }

  const TrafficAnalysis& traffic();
  void update_deadlock();
  void tick();
  void kill_jobs_on(NodeId node);

  void inject(const Injection& inj);
  void fail_link(LinkId link, const LinkEndpoint& at);
  void fail_connection(ConnectionRef conn, const std::vector<SimTime>& gaps);
  void fail_blade(BladeId blade);
  void restore(const Restoration& res);
  void restore_blade(BladeId blade, std::optional<FailStep> fail_step);

  const Campaign& c_;
  const Topology& topo_;
  Kernel kernel_;
  FabricState fabric_;
  Emitter emitter_;
  Rng rng_;
  RecoveryFsm fsm_;
  RouteTable table_;
  std::uint64_t table_serial_ = 0;
  SimTime end_;

  std::vector<AppJob> jobs_;
  std::uint64_t jobs_version_ = 0;
  int holds_ = 0;
  std::optional<RouterId> pending_corrupt_;
  std::optional<DeadlockState> deadlock_;
  std::vector<LinkId> injected_links_;
  std::vector<BladeId> injected_blades_;

  std::optional<TrafficAnalysis> traffic_;
  std::tuple<std::uint64_t, std::uint64_t, std::uint64_t> traffic_key_{};

  std::vector<LogRecord> log_;
  std::vector<TelemetrySample> telemetry_;
};

const TrafficAnalysis& Experiment::traffic() {
  auto key = std::make_tuple(fabric_.version(), table_serial_, jobs_version_);
  if (!traffic_ || key != traffic_key_) {
    traffic_ = analyze_traffic(topo_, fabric_, table_, jobs_, c_.flow_rate);
    traffic_key_ = key;
  }
  return *traffic_;
}

void Experiment::hold_quiesce(bool on) {
  holds_ += on ? 1 : -1;
  if (holds_ == 0) update_deadlock();
}

void Experiment::install_routes(RouteTable table) {
  if (pending_corrupt_) {
    table = table.with_corruption(*pending_corrupt_);
    pending_corrupt_.reset();
  }
  table_ = std::move(table);
  ++table_serial_;
}

// Looping flows wedge the fabric once traffic resumes; from then on every
// running job hangs.
void Experiment::update_deadlock() {
  if (deadlock_ || quiesced()) return;
  const TrafficAnalysis& t = traffic();
  if (!t.has_loop()) return;
  deadlock_ = DeadlockState{table_.corrupted_router().value_or(t.loop_routers.front()),
                            kernel_.now()};
  for (AppJob& job : jobs_) {
    if (job.status == JobStatus::Running) job.status = JobStatus::Hung;
  }
  ++jobs_version_;
}

void Experiment::tick() {
  // Sample after everything else scheduled for this instant.
  if (kernel_.pending_now()) {
    kernel_.schedule(kernel_.now(), EventKind::TelemetryTick, [this] { tick(); });
    return;
  }
  const SimTime t = kernel_.now();
  update_deadlock();
  NetworkView view{&topo_, &fabric_, &traffic(), quiesced(), deadlock_};
  for (LogRecord& r : emitter_.emit_for_state(view, t)) emit(std::move(r));
  auto samples = emitter_.sample_telemetry(view, t);
  telemetry_.insert(telemetry_.end(), samples.begin(), samples.end());
  if (t + kSecond <= end_) {
    kernel_.schedule(t + kSecond, EventKind::TelemetryTick, [this] { tick(); });
  }
}

void Experiment::kill_jobs_on(NodeId node) {
  for (AppJob& job : jobs_) {
    if (!on_node_failure(job, node, kernel_.now())) continue;
    ++jobs_version_;
    std::string cname = topo_.node_cname(node);
    log(LogSource::ALPS, Severity::Error, event::kEcNodeFailed, cname,
        "Application " + std::to_string(job.id) + " killed: ec_node_failed on " + cname);
    log(LogSource::ALPS, Severity::Error, event::kAppError, cname,
        "Application " + std::to_string(job.id) + " exited with errors");
  }
}

void Experiment::fail_link(LinkId link, const LinkEndpoint& at) {
  std::string cname = topo_.endpoint_cname(at);
  log(LogSource::CONSOLE, Severity::Info, event::kInject, cname, "Injecting LF on " + cname);
  try {
    fabric_.fail_link(link);
  } catch (const AlreadyDown& e) {
    console_error(cname, std::string("injection rejected: ") + e.what());
    return;
  }
  injected_links_.push_back(link);
  emit(emitter_.link_failure_record(at, kernel_.now()));
  for (const LinkEndpoint& e : topo_.link(link).ends) {
    std::string end = topo_.endpoint_cname(e);
    log(LogSource::BC, Severity::Warning, event::kLinkFailed, end, "Link failed on " + end);
    log(LogSource::BC, Severity::Warning, event::kChannelFailed, end,
        "Channel failed on " + end);
  }
  kernel_.schedule(kernel_.now() + c_.timings.detection_latency, EventKind::FailureReport,
                   [this, link] { fsm_.on_failure_report(link); });
}

void Experiment::fail_connection(ConnectionRef conn, const std::vector<SimTime>& gaps) {
  std::vector<ScheduledFailure> plan;
  try {
    plan = inject_connection(topo_, fabric_, conn, kernel_.now(), gaps);
  } catch (const AlreadyDown& e) {
    console_error(topo_.router_cname(conn.router), std::string("injection rejected: ") + e.what());
    return;
  }
  for (const ScheduledFailure& f : plan) {
    kernel_.schedule(f.at, EventKind::Inject, [this, f, conn] {
      if (fabric_.link_state(f.link) == LinkState::Down) return;
      fail_link(f.link, topo_.endpoint_on(f.link, conn.router));
    });
  }
}

void Experiment::fail_blade(BladeId blade) {
  const Blade& b = topo_.blade(blade);
  std::string cname = topo_.blade_cname(blade);
  log(LogSource::CONSOLE, Severity::Info, event::kInject, cname, "Injecting BF on " + cname);
  if (!fabric_.router_alive(b.asics[0]) && !fabric_.router_alive(b.asics[1])) {
    console_error(cname, "injection rejected: blade " + cname + " is already down");
    return;
  }
  injected_blades_.push_back(blade);

  std::vector<LinkId> links = blade_links(topo_, blade);
  std::array<std::vector<LinkId>, 2> groups;
  std::vector<LinkId> internal;
  for (LinkId l : links) {
    if (fabric_.link_state(l) == LinkState::Down) continue;
    const Link& link = topo_.link(l);
    bool on0 = link.ends[0].router == b.asics[0] || link.ends[1].router == b.asics[0];
    bool on1 = link.ends[0].router == b.asics[1] || link.ends[1].router == b.asics[1];
    if (on0 && on1) {
      internal.push_back(l);
    } else {
      groups[on0 ? 0 : 1].push_back(l);
    }
  }
  // The ASIC-to-ASIC links are split evenly between the two reports.
  const std::size_t half = internal.size() / 2;
  groups[0].insert(groups[0].end(), internal.begin(), internal.begin() + half);
  groups[1].insert(groups[1].end(), internal.begin() + half, internal.end());

  log(LogSource::BC, Severity::Critical, event::kBladeFailed, cname, "Blade " + cname + " failed");
  for (RouterId r : b.asics) fabric_.fail_router(r);
  for (NodeId n : b.nodes) {
    log(LogSource::BC, Severity::Critical, event::kNodeFailed, topo_.node_cname(n),
        "Node " + topo_.node_cname(n) + " failed");
    kill_jobs_on(n);
  }
  for (int g = 0; g < 2; ++g) {
    SimTime at = kernel_.now() + (g + 1) * c_.timings.detection_latency;
    kernel_.schedule(at, EventKind::FailureReport, [this, links = groups[g]] {
      for (LinkId l : links) {
        std::string lc = topo_.link_cname(l);
        log(LogSource::BC, Severity::Warning, event::kLinkFailed, lc, "Link failed on " + lc);
        fsm_.on_failure_report(l);
      }
    });
  }
}

void Experiment::inject(const Injection& inj) {
  if (c_.supervision) {
    std::string text = "pending: " + std::string(to_string(inj.cmd));
    for (const std::string& t : inj.targets) text += " " + t;
    if (inj.targets.empty()) text += " Random";
    command(text);
  }
  auto target = [&](std::size_t i) { return parse_cname(inj.targets.at(i)); };
  switch (inj.cmd) {
    case InjectCommand::NF: {
      NodeId n = inj.targets.empty() ? static_cast<NodeId>(rng_.below(topo_.node_count()))
                                     : topo_.resolve_node(target(0));
      std::string cname = topo_.node_cname(n);
      log(LogSource::CONSOLE, Severity::Info, event::kInject, cname, "Injecting NF on " + cname);
      if (!fabric_.node_alive(n)) {
        console_error(cname, "injection rejected: node " + cname + " is already down");
        return;
      }
      fabric_.fail_node(n);
      log(LogSource::BC, Severity::Critical, event::kNodeFailed, cname, "Node " + cname + " failed");
      kill_jobs_on(n);
      return;
    }
    case InjectCommand::LF: {
      LinkEndpoint end;
      if (inj.targets.empty()) {
        end = topo_.link(static_cast<LinkId>(rng_.below(topo_.link_count()))).ends[0];
      } else {
        end = topo_.resolve_link_end(target(0));
      }
      fail_link(topo_.router(end.router).links[end.local], end);
      return;
    }
    case InjectCommand::SCF: {
      ConnectionRef conn;
      if (inj.targets.empty()) {
        conn.router = static_cast<RouterId>(rng_.below(topo_.router_count()));
        conn.dir = kAllDirections[rng_.below(6)];
      } else {
        conn = connection_of(topo_, topo_.resolve_link_end(target(0)));
      }
      fail_connection(conn, inj.gaps);
      return;
    }
    case InjectCommand::TwoCF: {
      std::pair<ConnectionRef, ConnectionRef> pair;
      if (inj.targets.empty()) {
        pair = pick_2cf_targets(topo_, rng_.next());
      } else {
        pair = {connection_of(topo_, topo_.resolve_link_end(target(0))),
                connection_of(topo_, topo_.resolve_link_end(target(1)))};
      }
      fail_connection(pair.first, inj.gaps);
      fail_connection(pair.second, inj.gaps);
      return;
    }
    case InjectCommand::BF: {
      BladeId b = inj.targets.empty() ? static_cast<BladeId>(rng_.below(topo_.blade_count()))
                                      : topo_.resolve_blade(target(0));
      fail_blade(b);
      return;
    }
    case InjectCommand::RouteCorrupt: {
      RouterId r = inj.targets.empty() ? static_cast<RouterId>(rng_.below(topo_.router_count()))
                                       : topo_.resolve_router(target(0));
      std::string cname = topo_.router_cname(r);
      log(LogSource::CONSOLE, Severity::Info, event::kInject, cname,
          "Arming route table corruption on " + cname);
      pending_corrupt_ = r;
      return;
    }
  }
}

void Experiment::restore(const Restoration& res) {
  std::string targets;
  for (const std::string& t : res.targets) targets += (targets.empty() ? "" : " ") + t;
  if (c_.supervision) command("pending: " + std::string(to_string(res.cmd)) + " " + targets);
  log(LogSource::CONSOLE, Severity::Info, event::kRestore, "-",
      "Restoring " + std::string(to_string(res.cmd)) + " " + targets);

  if (res.cmd == RestoreCommand::BR) {
    std::optional<BladeId> blade;
    if (res.targets[0] == kInjected) {
      if (!injected_blades_.empty()) blade = injected_blades_.back();
    } else {
      blade = topo_.resolve_blade(parse_cname(res.targets[0]));
    }
    if (!blade) {
      console_error("-", "no injected blade to restore");
      return;
    }
    restore_blade(*blade, res.fail_step);
    return;
  }

  std::vector<LinkId> links;
  for (const std::string& t : res.targets) {
    if (t == kInjected) {
      for (LinkId l : injected_links_) {
        if (fabric_.link_state(l) != LinkState::Up) links.push_back(l);
      }
    } else {
      LinkEndpoint e = topo_.resolve_link_end(parse_cname(t));
      links.push_back(topo_.router(e.router).links[e.local]);
    }
  }
  std::sort(links.begin(), links.end());
  links.erase(std::unique(links.begin(), links.end()), links.end());
  if (links.empty()) {
    console_error("-", "no failed links to restore");
    return;
  }
  try {
    check_restorable(fabric_, links);
  } catch (const RestoreOnHealthy& e) {
    console_error("-", std::string("restore rejected: ") + e.what());
    return;
  }
  std::string list;
  for (LinkId l : links) list += (list.empty() ? "" : ",") + topo_.link_cname(l);
  command("xtwarmswap -s " + list + " -p p0");
  WarmSwapRequest req;
  req.links = std::move(links);
  req.fail = res.fail_step.has_value();
  req.done = [this](bool ok) {
    if (!ok) console_error("-", "xtwarmswap: hardware error during link initialization");
  };
  fsm_.start_warm_swap(std::move(req));
}

void Experiment::restore_blade(BladeId blade, std::optional<FailStep> fail_step) {
  const Blade& b = topo_.blade(blade);
  std::string cname = topo_.blade_cname(blade);
  if (fabric_.router_alive(b.asics[0]) && fabric_.router_alive(b.asics[1])) {
    console_error(cname, "restore rejected: blade " + cname + " is up");
    return;
  }
  command("xtwarmswap --remove " + cname);
  kernel_.schedule(kernel_.now() + c_.timings.blade_remove, EventKind::Restore, [=, this] {
    if (fail_step == FailStep::Remove) {
      console_error(cname, "xtwarmswap --remove " + cname + " failed");
      return;
    }
    command("xtwarmswap --add " + cname);
    WarmSwapRequest req;
    req.links = blade_links(topo_, blade);
    req.routers = {b.asics[0], b.asics[1]};
    req.fail = fail_step == FailStep::Add;
    req.done = [=, this](bool ok) {
      if (!ok) {
        console_error(cname, "xtwarmswap --add " + cname + " failed");
        return;
      }
      command("boot CNL0 " + cname);
      kernel_.schedule(kernel_.now() + c_.timings.blade_boot, EventKind::Restore, [=, this] {
        if (fail_step == FailStep::Boot) {
          console_error(cname, "boot of " + cname + " failed");
          return;
        }
        for (NodeId n : b.nodes) fabric_.restore_node(n);
        log(LogSource::SMW, Severity::Info, event::kBladeRecoverySuccess, cname,
            "Blade " + cname + " recovered");
      });
    };
    fsm_.start_warm_swap(std::move(req));
  });
}

ExperimentArtifacts Experiment::run() {
  jobs_ = generate_workload(c_.workload, topo_, 0);
  log(LogSource::CONSOLE, Severity::Info, event::kExperimentStart, "-",
      "Experiment " + c_.name + " started");
  for (const AppJob& job : jobs_) {
    log(LogSource::ALPS, Severity::Info, event::kAppStart, topo_.node_cname(job.nodes.front()),
        "Application " + std::to_string(job.id) + " started on " +
            std::to_string(job.nodes.size()) + " nodes (" + std::string(to_string(job.scale)) +
            ")");
  }
  for (const Injection& inj : c_.injections) {
    kernel_.schedule(inj.at, EventKind::Inject, [this, &inj] { inject(inj); });
  }
  for (const Restoration& res : c_.restorations) {
    kernel_.schedule(res.at, EventKind::Restore, [this, &res] { restore(res); });
  }
  for (const ScriptedError& e : c_.scripted_errors) {
    kernel_.schedule(e.at, EventKind::LogEmit, [this, &e] {
      emit(emitter_.hw_record(kernel_.now(), e.kind, topo_.resolve_router(parse_cname(e.target))));
    });
  }
  kernel_.schedule(0, EventKind::TelemetryTick, [this] { tick(); });
  kernel_.run_until(end_);

  for (AppJob& job : jobs_) {
    if (job.status != JobStatus::Running) continue;
    job.status = JobStatus::Completed;
    job.end = end_;
    log(LogSource::ALPS, Severity::Info, event::kAppExit, topo_.node_cname(job.nodes.front()),
        "Application " + std::to_string(job.id) + " completed");
  }
  log(LogSource::CONSOLE, Severity::Info, event::kExperimentEnd, "-",
      "Experiment " + c_.name + " ended");

  ExperimentArtifacts out;
  out.header = run_header(c_.seed, c_.dims, config_digest(c_)) + "\n#campaign name=" + c_.name +
               " scenario=" + default_scenario(c_) + "\n";
  out.log = std::move(log_);
  out.telemetry = std::move(telemetry_);
  out.jobs = std::move(jobs_);
  out.procedures = fsm_.procedures();
  out.deadlock = deadlock_;
  out.epoch_start = c_.start_epoch;
  out.end = end_;
  return out;
}

}  // namespace

ExperimentArtifacts run_campaign(const Campaign& campaign, const Topology& topo) {
  validate_campaign(campaign, topo);
  Experiment experiment(campaign, topo);
  return experiment.run();
}

}  // namespace faultlab
