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

#include "faultlab/emitter.h"

#include <array>
#include <charconv>
#include <cstdio>
#include <deque>
#include <sstream>
#include <unordered_map>

namespace faultlab {

std::string_view to_string(LogSource s) {
  static constexpr std::array<std::string_view, 5> kNames = {"BC", "SMW", "ALPS", "CONSOLE",
                                                             "HW"};
  return kNames[static_cast<int>(s)];
}

std::string_view to_string(Severity s) {
  static constexpr std::array<std::string_view, 4> kNames = {"INFO", "WARNING", "ERROR",
                                                             "CRITICAL"};
  return kNames[static_cast<int>(s)];
}

std::optional<LogSource> parse_log_source(std::string_view text) {
  for (int i = 0; i < 5; ++i) {
    if (to_string(static_cast<LogSource>(i)) == text) return static_cast<LogSource>(i);
  }
  return std::nullopt;
}

std::optional<Severity> parse_severity(std::string_view text) {
  for (int i = 0; i < 4; ++i) {
    if (to_string(static_cast<Severity>(i)) == text) return static_cast<Severity>(i);
  }
  return std::nullopt;
}

namespace {

struct HwInfo {
  std::string_view type;
  std::string_view message;
  Severity severity;
};

constexpr std::array<HwInfo, kHwErrorKinds> kHwInfo = {{
    {"orb_ram_scrubbed_upper", "ORB RAM Scrubbed Upper Entry", Severity::Warning},
    {"orb_ram_scrubbed_lower", "ORB RAM Scrubbed Lower Entry", Severity::Warning},
    {"orb_request_no_entry", "ORB Request with No Entry", Severity::Critical},
    {"receiver_8b10b", "Receiver 8b10b Error", Severity::Error},
    {"lb_lack_forward_progress", "LB Lack of Forward Progress", Severity::Error},
    {"nw_send_packet_length_error", "NW Send Packet Length Error", Severity::Error},
    {"ssid_stale_on_response", "SSID Stale on Response", Severity::Error},
    {"ssid_stale", "SSID Stale", Severity::Error},
    {"nif_squashed_tile_request", "NIF Squashed from Tile Request", Severity::Warning},
}};

std::string format_epoch_ms(std::int64_t ms) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld.%03lld", static_cast<long long>(ms / 1000),
                static_cast<long long>(ms % 1000));
  return buf;
}

std::optional<std::int64_t> parse_epoch_ms(std::string_view text) {
  auto dot = text.find('.');
  if (dot == std::string_view::npos || text.size() - dot != 4 || dot == 0) return std::nullopt;
  std::int64_t secs = 0;
  std::int64_t millis = 0;
  auto whole = text.substr(0, dot);
  auto frac = text.substr(dot + 1);
  auto r1 = std::from_chars(whole.data(), whole.data() + whole.size(), secs);
  auto r2 = std::from_chars(frac.data(), frac.data() + frac.size(), millis);
  if (r1.ec != std::errc() || r1.ptr != whole.data() + whole.size()) return std::nullopt;
  if (r2.ec != std::errc() || r2.ptr != frac.data() + frac.size()) return std::nullopt;
  if (secs < 0) return std::nullopt;
  return secs * 1000 + millis;
}

}  // namespace

std::string_view event_type(HwErrorKind k) { return kHwInfo[static_cast<int>(k)].type; }
std::string_view message_text(HwErrorKind k) { return kHwInfo[static_cast<int>(k)].message; }
Severity severity_of(HwErrorKind k) { return kHwInfo[static_cast<int>(k)].severity; }

std::optional<HwErrorKind> parse_hw_event_type(std::string_view type) {
  for (int i = 0; i < kHwErrorKinds; ++i) {
    if (kHwInfo[i].type == type) return static_cast<HwErrorKind>(i);
  }
  return std::nullopt;
}

bool is_orb_scrub(std::string_view type) {
  return type == event_type(HwErrorKind::OrbRamScrubbedUpper) ||
         type == event_type(HwErrorKind::OrbRamScrubbedLower);
}

std::string LogRecord::to_line() const {
  std::string line = format_epoch_ms(epoch_ms);
  line += '|';
  line += to_string(source);
  line += '|';
  line += to_string(severity);
  line += '|';
  line += event_type;
  line += '|';
  line += cname;
  line += '|';
  line += message;
  return line;
}

MalformedLog::MalformedLog(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

LogRecord parse_log_line(std::string_view line, std::size_t line_number) {
  std::array<std::string_view, 6> fields;
  std::size_t start = 0;
  for (int i = 0; i < 5; ++i) {
    auto bar = line.find('|', start);
    if (bar == std::string_view::npos) {
      throw MalformedLog(line_number, "expected 6 '|'-separated fields");
    }
    fields[i] = line.substr(start, bar - start);
    start = bar + 1;
  }
  fields[5] = line.substr(start);

  LogRecord rec;
  auto epoch = parse_epoch_ms(fields[0]);
  if (!epoch) throw MalformedLog(line_number, "bad timestamp '" + std::string(fields[0]) + "'");
  rec.epoch_ms = *epoch;
  auto source = parse_log_source(fields[1]);
  if (!source) throw MalformedLog(line_number, "bad source '" + std::string(fields[1]) + "'");
  rec.source = *source;
  auto severity = parse_severity(fields[2]);
  if (!severity) {
    throw MalformedLog(line_number, "bad severity '" + std::string(fields[2]) + "'");
  }
  rec.severity = *severity;
  if (fields[3].empty()) throw MalformedLog(line_number, "empty event type");
  rec.event_type = std::string(fields[3]);
  if (fields[4].empty()) throw MalformedLog(line_number, "empty cname");
  rec.cname = std::string(fields[4]);
  rec.message = std::string(fields[5]);
  return rec;
}

std::string run_header(std::uint64_t seed, const TorusDims& dims, std::string_view digest) {
  return "#run seed=" + std::to_string(seed) + " dims=" + dims.to_string() +
         " config_digest=" + std::string(digest);
}

std::string telemetry_csv(const Topology& topo, const std::vector<TelemetrySample>& samples) {
  std::vector<std::string> names(topo.router_count());
  for (RouterId r = 0; r < names.size(); ++r) names[r] = topo.router_cname(r);
  std::string out(kTelemetryHeader);
  out += '\n';
  for (const TelemetrySample& s : samples) {
    out += std::to_string(s.t);
    out += ',';
    out += names[s.router];
    out += ',';
    out += to_string(s.dir);
    out += ',';
    out += std::to_string(s.bytes);
    out += ',';
    out += std::to_string(s.up_links);
    out += '\n';
  }
  return out;
}

std::vector<TelemetrySample> parse_telemetry_csv(const Topology& topo, std::string_view text) {
  std::unordered_map<std::string, RouterId> ids;
  for (RouterId r = 0; r < topo.router_count(); ++r) ids.emplace(topo.router_cname(r), r);

  std::vector<TelemetrySample> samples;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kTelemetryHeader) throw MalformedLog(line_no, "bad telemetry header");
      continue;
    }
    if (line.empty()) continue;
    std::array<std::string_view, 5> f;
    std::size_t start = 0;
    for (int i = 0; i < 5; ++i) {
      auto comma = i < 4 ? line.find(',', start) : line.size();
      if (comma == std::string_view::npos) throw MalformedLog(line_no, "expected 5 fields");
      f[i] = line.substr(start, comma - start);
      start = comma + 1;
    }
    TelemetrySample s;
    auto it = ids.find(std::string(f[1]));
    auto dir = parse_direction(f[2]);
    if (it == ids.end() || !dir) throw MalformedLog(line_no, "unknown router or direction");
    s.router = it->second;
    s.dir = *dir;
    auto r0 = std::from_chars(f[0].data(), f[0].data() + f[0].size(), s.t);
    auto r3 = std::from_chars(f[3].data(), f[3].data() + f[3].size(), s.bytes);
    auto r4 = std::from_chars(f[4].data(), f[4].data() + f[4].size(), s.up_links);
    if (r0.ec != std::errc() || r3.ec != std::errc() || r4.ec != std::errc()) {
      throw MalformedLog(line_no, "bad number");
    }
    samples.push_back(s);
  }
  return samples;
}

Emitter::Emitter(const Topology& topo, EmitterConfig config)
    : topo_(&topo),
      config_(config),
      blocked_since_(topo.router_count(), -1),
      scrubs_(topo.router_count(), 0) {}

LogRecord Emitter::record(SimTime t, LogSource source, Severity severity, std::string_view type,
                          std::string cname, std::string message) const {
  LogRecord rec;
  rec.epoch_ms = epoch_ms(t);
  rec.source = source;
  rec.severity = severity;
  rec.event_type = std::string(type);
  rec.cname = cname.empty() ? "-" : std::move(cname);
  rec.message = std::move(message);
  return rec;
}

LogRecord Emitter::hw_record(SimTime t, HwErrorKind kind, RouterId router) const {
  return record(t, LogSource::HW, severity_of(kind), event_type(kind),
                topo_->router_cname(router), std::string(message_text(kind)));
}

LogRecord Emitter::link_failure_record(const LinkEndpoint& at, SimTime t) const {
  return record(t, LogSource::HW, severity_of(HwErrorKind::NwSendPacketLengthError),
                event_type(HwErrorKind::NwSendPacketLengthError), topo_->endpoint_cname(at),
                std::string(message_text(HwErrorKind::NwSendPacketLengthError)));
}

std::vector<RouterId> Emitter::spread_set(const Topology& topo, const FabricState& fabric,
                                          RouterId origin, int radius) {
  std::vector<int> dist(topo.router_count(), -1);
  std::deque<RouterId> queue{origin};
  dist[origin] = 0;
  while (!queue.empty()) {
    RouterId r = queue.front();
    queue.pop_front();
    if (dist[r] >= radius) continue;
    for (Direction d : kAllDirections) {
      RouterId p = topo.peer(r, d);
      if (dist[p] >= 0 || !fabric.connection_usable(r, d) || !fabric.router_alive(p)) continue;
      dist[p] = dist[r] + 1;
      queue.push_back(p);
    }
  }
  std::vector<RouterId> out;
  for (RouterId r = 0; r < dist.size(); ++r) {
    if (dist[r] >= 0) out.push_back(r);
  }
  return out;
}

std::vector<LogRecord> Emitter::emit_for_state(const NetworkView& view, SimTime t) {
  const FabricState& fabric = *view.fabric;
  const auto n = topo_->router_count();
  for (RouterId r = 0; r < n; ++r) {
    bool blocked = view.offered != nullptr && view.offered->blocked[r] != 0;
    if (!blocked) {
      blocked_since_[r] = -1;
    } else if (blocked_since_[r] < 0) {
      blocked_since_[r] = t;
    }
  }

  std::vector<LogRecord> out;
  if (t % config_.scrub_cadence != 0) return out;

  // R1: stalled requests time out and are scrubbed.
  std::vector<std::uint8_t> scrub(n, 0);
  for (RouterId r = 0; r < n; ++r) {
    if (blocked_since_[r] >= 0 && blocked_since_[r] <= t - kSecond) scrub[r] = 1;
  }
  // R3: in a wedged network the scrubbing routers spread out from the
  // corrupted one, one hop per spread interval.
  if (view.deadlock) {
    int radius = static_cast<int>((t - view.deadlock->onset) / config_.deadlock_spread_interval);
    for (RouterId r : spread_set(*topo_, fabric, view.deadlock->origin, radius)) scrub[r] = 1;
  }
  for (RouterId r = 0; r < n; ++r) {
    if (!scrub[r] || !fabric.router_alive(r)) continue;
    auto kind = scrubs_[r]++ % 2 == 0 ? HwErrorKind::OrbRamScrubbedUpper
                                      : HwErrorKind::OrbRamScrubbedLower;
    out.push_back(hw_record(t, kind, r));
  }

  if (view.deadlock) {
    const RouterId origin = view.deadlock->origin;
    for (Direction d : kAllDirections) {
      RouterId p = topo_->peer(origin, d);
      if (fabric.connection_usable(origin, d) && fabric.router_alive(p)) {
        out.push_back(hw_record(t, HwErrorKind::LbLackForwardProgress, p));
      }
    }
    // R4: misrouted packets fail the consistency check at the bad router.
    out.push_back(hw_record(t, HwErrorKind::NifSquashedTileRequest, origin));
    SimTime since = t - view.deadlock->onset;
    if (since >= config_.deadlock_late_error_delay &&
        (since - config_.deadlock_late_error_delay) % config_.late_error_cadence <
            config_.scrub_cadence) {
      out.push_back(hw_record(t, HwErrorKind::SsidStaleOnResponse, origin));
      out.push_back(hw_record(t, HwErrorKind::OrbRequestNoEntry, origin));
    }
  }
  return out;
}

std::vector<TelemetrySample> Emitter::sample_telemetry(const NetworkView& view,
                                                       SimTime t) const {
  std::vector<TelemetrySample> out;
  if (view.quiesced) return out;
  const std::int64_t epoch_s = config_.epoch_start + t / kSecond;
  for (RouterId r = 0; r < topo_->router_count(); ++r) {
    if (!view.fabric->router_alive(r)) continue;
    for (Direction d : kAllDirections) {
      TelemetrySample s;
      s.t = epoch_s;
      s.router = r;
      s.dir = d;
      s.bytes = view.offered != nullptr ? view.offered->at(r, d) : 0;
      s.up_links = view.fabric->up_links(r, d);
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace faultlab
