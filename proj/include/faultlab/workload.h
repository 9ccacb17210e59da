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

#include "faultlab/routing.h"
#include "faultlab/simkernel.h"
#include "faultlab/topology.h"

namespace faultlab {

/// Half-open node-count classes: [1,512), [512,1024), [1024,4096), [4096,inf).
enum class ScaleClass : std::uint8_t { Nano, Small, Medium, Large };

ScaleClass classify(std::size_t nodes);
std::string_view to_string(ScaleClass c);
std::optional<ScaleClass> parse_scale_class(std::string_view text);

enum class JobStatus : std::uint8_t { Running, Completed, Killed, Hung };
std::string_view to_string(JobStatus s);

inline constexpr std::string_view kReasonNodeFailed = "ec_node_failed";

struct AppJob {
  std::uint32_t id = 0;
  std::vector<NodeId> nodes;
  ScaleClass scale = ScaleClass::Nano;
  SimTime start = 0;
  std::optional<SimTime> end;
  JobStatus status = JobStatus::Running;
  std::string reason;  // set when Killed
};

struct WorkloadSpec {
  // Indexed by ScaleClass.
  std::array<int, 4> counts{0, 5, 2, 1};
  std::array<int, 4> nodes_per{64, 512, 1024, 4096};

  std::size_t total_nodes() const;
};

class InsufficientNodes : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All-to-all jobs placed on consecutive node ids (z varies fastest), in
/// class order Nano, Small, Medium, Large. Throws InsufficientNodes, or
/// std::invalid_argument when a class's node count falls outside its interval.
std::vector<AppJob> generate_workload(const WorkloadSpec& spec, const Topology& topo,
                                      SimTime start = 0);

/// Offered traffic of running jobs forwarded over an installed route table.
struct TrafficAnalysis {
  std::vector<std::uint64_t> rate;  // bytes/s, indexed router * 6 + direction
  std::vector<std::uint8_t> blocked;  // router holds a flow it cannot forward
  std::vector<RouterId> loop_routers;  // routers where a looping flow was caught
  std::uint64_t flows = 0;
  std::uint64_t delivered = 0;
  std::uint64_t stalled = 0;

  bool has_loop() const { return !loop_routers.empty(); }
  std::uint64_t at(RouterId r, Direction d) const {
    return rate[r * 6 + static_cast<std::size_t>(d)];
  }
};

/// Each ordered pair of a job's nodes on different routers is one flow of
/// `flow_rate` bytes/s; a flow loads the output connection of every router on
/// its path. Flows that stall (blocked or looping) carry nothing.
TrafficAnalysis analyze_traffic(const Topology& topo, const FabricState& fabric,
                                const RouteTable& table, const std::vector<AppJob>& jobs,
                                std::uint64_t flow_rate);

/// Per-connection carried byte rate: the offered analysis, or all zeros while
/// the network is quiesced.
std::vector<std::uint64_t> traffic_demand(const Topology& topo, const FabricState& fabric,
                                          const RouteTable& table,
                                          const std::vector<AppJob>& jobs,
                                          std::uint64_t flow_rate, bool quiesced);

/// Marks a running job that owns `node` as Killed(ec_node_failed). Returns
/// true if the job's status changed.
bool on_node_failure(AppJob& job, NodeId node, SimTime t);

/// `job_id,class,nodes,status,reason,start,end` with epoch-second times.
std::string job_outcomes_csv(const std::vector<AppJob>& jobs, std::int64_t epoch_start);

}  // namespace faultlab
