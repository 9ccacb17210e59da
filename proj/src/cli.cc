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

#include "faultlab/cli.h"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "faultlab/analyzer.h"
#include "faultlab/patterns.h"
#include "faultlab/routing.h"

namespace faultlab {

namespace fs = std::filesystem;

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

TorusDims dims_from_header(std::string_view events) {
  auto pos = events.find("dims=");
  if (!events.starts_with("#run ") || pos == std::string_view::npos) {
    throw MalformedLog(1, "missing #run header");
  }
  auto rest = events.substr(pos + 5);
  return parse_dims(rest.substr(0, rest.find_first_of(" \n")));
}

Campaign load_campaign(const fs::path& path, std::optional<std::uint64_t> seed,
                       const std::string& dims) {
  Campaign c = parse_campaign(read_file(path));
  if (seed) c.seed = *seed;
  if (!dims.empty()) {
    try {
      c.dims = parse_dims(dims);
      validate_dims(c.dims);
    } catch (const InvalidDims& e) {
      throw CampaignInvalid("dims", e.what());
    }
  }
  return c;
}

std::string default_dictionary() { return FAULTLAB_DEFAULT_DICTIONARY; }

int cmd_topo(const std::string& dims_text, bool summary, std::ostream& out) {
  Topology topo(parse_dims(dims_text));
  if (summary) {
    out << "routers " << topo.router_count() << "\nblades " << topo.blade_count() << "\nnodes "
        << topo.node_count() << "\nlinks " << topo.link_count() << '\n';
    return kExitOk;
  }
  std::string buf;
  auto line = [&](std::string_view kind, const std::string& cname, const Coord& c) {
    buf += kind;
    buf += ',' + cname + ',' + std::to_string(c.x) + ',' + std::to_string(c.y) + ',' +
           std::to_string(c.z) + '\n';
  };
  for (const Router& r : topo.routers()) line("router", topo.router_cname(r.id), r.coord);
  for (const Blade& b : topo.blades()) {
    line("blade", topo.blade_cname(b.id), topo.router(b.asics[0]).coord);
  }
  for (NodeId n = 0; n < topo.node_count(); ++n) {
    line("node", topo.node_cname(n), topo.router(Topology::router_of_node(n)).coord);
  }
  for (const Link& l : topo.links()) {
    line("link", topo.link_cname(l.id), topo.router(l.ends[0].router).coord);
  }
  out << buf;
  return kExitOk;
}

int cmd_routes(const std::string& dims_text, const std::string& src, const std::string& dst,
               const std::vector<std::string>& down, std::ostream& out) {
  Topology topo(parse_dims(dims_text));
  FabricState fabric(topo);
  for (const std::string& l : down) {
    LinkEndpoint e = topo.resolve_link_end(parse_cname(l));
    LinkId id = topo.router(e.router).links[e.local];
    if (fabric.link_state(id) != LinkState::Down) fabric.fail_link(id);
  }
  RouterId a = topo.resolve_router(parse_cname(src));
  RouterId b = topo.resolve_router(parse_cname(dst));
  RouteTable table = compute_routes(topo, fabric);
  out << topo.router_cname(a) << " -> " << topo.router_cname(b) << " :";
  for (const Hop& h : path_of(table, a, b)) out << ' ' << to_string(h.dir);
  out << '\n';
  return kExitOk;
}

int cmd_run(const std::string& campaign_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, const std::string& dims, std::ostream& out) {
  Campaign c = load_campaign(campaign_path, seed, dims);
  Topology topo(c.dims);
  ExperimentArtifacts a = run_campaign(c, topo);
  RunFiles files = render_run(c, topo, a);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  fs::path dir(out_dir);
  write_file(dir / "campaign.json", files.campaign);
  write_file(dir / "events.log", files.events);
  write_file(dir / "telemetry.csv", files.telemetry);
  write_file(dir / "jobs.csv", files.jobs);
  std::size_t ok = 0;
  for (const RecoveryProcedure& p : a.procedures) ok += p.outcome == Outcome::Success;
  out << "run " << c.name << ": " << a.log.size() << " log records, " << a.telemetry.size()
      << " telemetry samples, " << a.procedures.size() << " recovery procedures (" << ok
      << " succeeded) -> " << out_dir << '\n';
  return kExitOk;
}

std::optional<ReportWindow> parse_window(const std::string& text) {
  if (text.empty()) return std::nullopt;
  auto comma = text.find(',');
  if (comma == std::string::npos) throw CLI::ValidationError("--window", "expected start,end");
  try {
    return ReportWindow{std::stoll(text.substr(0, comma)), std::stoll(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--window", "expected start,end in epoch seconds");
  }
}

int cmd_analyze(const std::string& run_dir, const std::string& window, bool plots,
                std::ostream& out) {
  fs::path dir(run_dir);
  std::optional<ReportWindow> w = parse_window(window);
  std::string events = read_file(dir / "events.log");
  Topology topo(dims_from_header(events));
  ParsedLog log = parse_log(events);
  auto telemetry = parse_telemetry_csv(topo, read_file(dir / "telemetry.csv"));
  JobSummary jobs = summarize_jobs(read_file(dir / "jobs.csv"));
  ExperimentReport rep = build_report(log, telemetry, jobs, w);
  write_file(dir / "report.json", rep.to_json());
  if (plots) {
    write_file(dir / "traffic_cdf.csv", traffic_cdf_csv(telemetry));
    write_file(dir / "error_cdf.csv", error_cdf_csv(log.records));
  }
  out << rep.to_text();
  return rep.deadlock || !rep.anomalies.empty() ? kExitAnomaly : kExitOk;
}

int cmd_patterns(const std::string& log_path, const std::string& dict_path, bool dump,
                 std::ostream& out) {
  Dictionary dict = Dictionary::parse(read_file(dict_path.empty() ? default_dictionary()
                                                                  : dict_path));
  std::vector<std::string> messages;
  std::istringstream in(read_file(log_path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    try {
      messages.push_back(parse_log_line(line).message);
    } catch (const MalformedLog&) {
      messages.push_back(line);
    }
  }
  std::vector<Pattern> patterns = mine_patterns(messages, dict);
  if (dump) {
    for (const Pattern& p : patterns) out << p.count << '\t' << p.text() << '\n';
    return kExitOk;
  }
  for (const MetaPattern& m : aggregate(patterns, &dict)) {
    out << m.count << '\t' << m.text() << '\n';
  }
  return kExitOk;
}

int cmd_replay(const std::string& run_dir, std::ostream& out, std::ostream& err) {
  fs::path dir(run_dir);
  Campaign c = parse_campaign(read_file(dir / "campaign.json"));
  Topology topo(c.dims);
  RunFiles files = render_run(c, topo, run_campaign(c, topo));
  bool same = true;
  for (auto [name, text] : {std::pair<const char*, const std::string*>{"events.log", &files.events},
                            {"telemetry.csv", &files.telemetry}}) {
    if (read_file(dir / name) != *text) {
      err << "replay: " << name << " differs\n";
      same = false;
    }
  }
  if (!same) return kExitAnomaly;
  out << "replay: events.log and telemetry.csv are identical\n";
  return kExitOk;
}

}  // namespace

RunFiles render_run(const Campaign& campaign, const Topology& topo,
                    const ExperimentArtifacts& artifacts) {
  RunFiles f;
  f.campaign = campaign_json(campaign);
  f.events = artifacts.events_text();
  f.telemetry = telemetry_csv(topo, artifacts.telemetry);
  f.jobs = job_outcomes_csv(artifacts.jobs, artifacts.epoch_start);
  return f;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Torus interconnect fault-injection simulator and log analyzer", "faultlab"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print version and campaign schema version");

  std::string dims = "16x12x24";
  bool summary = false;
  auto* topo = app.add_subcommand("topo", "Dump the torus components");
  topo->add_option("--dims", dims, "Torus dimensions XxYxZ");
  topo->add_flag("--summary", summary, "Print component counts only");

  std::string src, dst;
  std::vector<std::string> down;
  auto* routes = app.add_subcommand("routes", "Print the route between two routers");
  routes->add_option("src", src, "Source router cname")->required();
  routes->add_option("dst", dst, "Destination router cname")->required();
  routes->add_option("--dims", dims, "Torus dimensions XxYxZ");
  routes->add_option("--down", down, "Link endpoints to fail first");

  std::string campaign, out_dir, run_dims;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Execute a campaign into a run directory");
  run->add_option("campaign", campaign, "Campaign JSON file")->required();
  run->add_option("--out", out_dir, "Run directory")->required();
  run->add_option("--seed", seed, "Override the campaign seed");
  run->add_option("--dims", run_dims, "Override the campaign dimensions");

  std::string run_dir, window;
  bool plots = false;
  auto* analyze = app.add_subcommand("analyze", "Build the experiment report of a run");
  analyze->add_option("run_dir", run_dir, "Run directory")->required();
  analyze->add_option("--window", window, "start,end in epoch seconds");
  analyze->add_flag("--plots", plots, "Also write cumulative traffic and error CSVs");

  std::string log_path, dict_path;
  bool dump = false;
  auto* patterns = app.add_subcommand("patterns", "Mine message patterns from a log");
  patterns->add_option("log", log_path, "Log file")->required();
  patterns->add_option("--dict", dict_path, "Dictionary file");
  patterns->add_flag("--dump-patterns", dump, "Print patterns before aggregation");

  auto* replay = app.add_subcommand("replay", "Re-run a run directory and compare outputs");
  replay->add_option("run_dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (version) {
      out << "faultlab " << kVersion << " (campaign schema " << kCampaignSchemaVersion << ")\n";
      return kExitOk;
    }
    if (*topo) return cmd_topo(dims, summary, out);
    if (*routes) return cmd_routes(dims, src, dst, down, out);
    if (*run) return cmd_run(campaign, out_dir, seed, run_dims, out);
    if (*analyze) return cmd_analyze(run_dir, window, plots, out);
    if (*patterns) return cmd_patterns(log_path, dict_path, dump, out);
    if (*replay) return cmd_replay(run_dir, out, err);
    err << app.help();
    return kExitUsage;
  } catch (const CampaignInvalid& e) {
    err << "invalid campaign: " << e.what() << '\n';
    return kExitInvalidCampaign;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MalformedLog& e) {
    err << "error: " << e.what() << '\n';
    return kExitAnomaly;
  } catch (const WindowEmpty& e) {
    err << "error: " << e.what() << '\n';
    return kExitAnomaly;
  } catch (const std::invalid_argument& e) {
    // Malformed cnames and dimensions given on the command line.
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace faultlab
