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

#include "faultlab/workload.h"

#include <algorithm>
#include <map>
#include <sstream>

namespace faultlab {

ScaleClass classify(std::size_t nodes) {
  if (nodes < 512) return ScaleClass::Nano;
  if (nodes < 1024) return ScaleClass::Small;
  if (nodes < 4096) return ScaleClass::Medium;
  return ScaleClass::Large;
}

std::string_view to_string(ScaleClass c) {
  static constexpr std::array<std::string_view, 4> kNames = {"nano", "small", "medium",
                                                             "large"};
  return kNames[static_cast<int>(c)];
}

std::optional<ScaleClass> parse_scale_class(std::string_view text) {
  for (int i = 0; i < 4; ++i) {
    auto c = static_cast<ScaleClass>(i);
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::string_view to_string(JobStatus s) {
  static constexpr std::array<std::string_view, 4> kNames = {"running", "completed",
                                                             "killed", "hung"};
  return kNames[static_cast<int>(s)];
}

std::size_t WorkloadSpec::total_nodes() const {
  std::size_t total = 0;
  for (int i = 0; i < 4; ++i) {
    total += static_cast<std::size_t>(std::max(counts[i], 0)) *
             static_cast<std::size_t>(std::max(nodes_per[i], 0));
  }
  return total;
}

std::vector<AppJob> generate_workload(const WorkloadSpec& spec, const Topology& topo,
                                      SimTime start) {
  for (int i = 0; i < 4; ++i) {
    auto c = static_cast<ScaleClass>(i);
    if (spec.counts[i] < 0) {
      throw std::invalid_argument("negative job count for class " + std::string(to_string(c)));
    }
    if (spec.counts[i] > 0 &&
        (spec.nodes_per[i] < 1 || classify(static_cast<std::size_t>(spec.nodes_per[i])) != c)) {
      throw std::invalid_argument(std::to_string(spec.nodes_per[i]) +
                                  " nodes is not a " + std::string(to_string(c)) + " job");
    }
  }
  if (spec.total_nodes() > topo.node_count()) {
    throw InsufficientNodes("workload needs " + std::to_string(spec.total_nodes()) +
                            " nodes, torus has " + std::to_string(topo.node_count()));
  }

  std::vector<AppJob> jobs;
  NodeId next = 0;
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < spec.counts[i]; ++k) {
      AppJob job;
      job.id = static_cast<std::uint32_t>(jobs.size());
      job.scale = static_cast<ScaleClass>(i);
      job.start = start;
      for (int n = 0; n < spec.nodes_per[i]; ++n) job.nodes.push_back(next++);
      jobs.push_back(std::move(job));
    }
  }
  return jobs;
}

TrafficAnalysis analyze_traffic(const Topology& topo, const FabricState& fabric,
                                const RouteTable& table, const std::vector<AppJob>& jobs,
                                std::uint64_t flow_rate) {
  TrafficAnalysis out;
  out.rate.assign(topo.router_count() * 6, 0);
  out.blocked.assign(topo.router_count(), 0);
  std::vector<std::uint8_t> looped(topo.router_count(), 0);
  std::map<std::pair<RouterId, RouterId>, RouteTrace> traces;

  for (const AppJob& job : jobs) {
    if (job.status != JobStatus::Running) continue;
    std::map<RouterId, std::uint64_t> per_router;
    for (NodeId n : job.nodes) {
      if (fabric.node_alive(n)) ++per_router[Topology::router_of_node(n)];
    }
    for (const auto& [src, src_nodes] : per_router) {
      for (const auto& [dst, dst_nodes] : per_router) {
        if (src == dst) continue;
        std::uint64_t weight = src_nodes * dst_nodes;
        out.flows += weight;
        auto key = std::make_pair(src, dst);
        auto it = traces.find(key);
        if (it == traces.end()) {
          it = traces.emplace(key, trace_route(table, fabric, src, dst)).first;
        }
        const RouteTrace& trace = it->second;
        switch (trace.outcome) {
          case RouteTrace::Outcome::Delivered:
            out.delivered += weight;
            for (const Hop& h : trace.hops) {
              out.rate[h.router * 6 + static_cast<std::size_t>(h.dir)] += weight * flow_rate;
            }
            break;
          case RouteTrace::Outcome::Blocked:
            out.stalled += weight;
            out.blocked[trace.stalled_at] = 1;
            break;
          case RouteTrace::Outcome::Loop:
            out.stalled += weight;
            looped[trace.stalled_at] = 1;
            break;
        }
      }
    }
  }
  for (RouterId r = 0; r < looped.size(); ++r) {
    if (looped[r]) out.loop_routers.push_back(r);
  }
  return out;
}

std::vector<std::uint64_t> traffic_demand(const Topology& topo, const FabricState& fabric,
                                          const RouteTable& table,
                                          const std::vector<AppJob>& jobs,
                                          std::uint64_t flow_rate, bool quiesced) {
  if (quiesced) return std::vector<std::uint64_t>(topo.router_count() * 6, 0);
  return analyze_traffic(topo, fabric, table, jobs, flow_rate).rate;
}

bool on_node_failure(AppJob& job, NodeId node, SimTime t) {
  if (job.status != JobStatus::Running) return false;
  if (std::find(job.nodes.begin(), job.nodes.end(), node) == job.nodes.end()) return false;
  job.status = JobStatus::Killed;
  job.reason = std::string(kReasonNodeFailed);
  job.end = t;
  return true;
}

std::string job_outcomes_csv(const std::vector<AppJob>& jobs, std::int64_t epoch_start) {
  std::ostringstream out;
  out << "job_id,class,nodes,status,reason,start,end\n";
  for (const AppJob& job : jobs) {
    out << job.id << ',' << to_string(job.scale) << ',' << job.nodes.size() << ','
        << to_string(job.status) << ',' << job.reason << ','
        << epoch_start + job.start / kSecond << ',';
    if (job.end) out << epoch_start + *job.end / kSecond;
    out << '\n';
  }
  return out.str();
}

}  // namespace faultlab
