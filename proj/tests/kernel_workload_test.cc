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

#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>

#include "faultlab/simkernel.h"
#include "faultlab/workload.h"

namespace faultlab {
namespace {

TEST(Kernel, DispatchesInTimeThenSeqOrder) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Kernel k;
    std::vector<std::pair<SimTime, std::uint64_t>> seen;
    for (int i = 0; i < 200; ++i) {
      SimTime t = static_cast<SimTime>(rng() % 50);
      auto seq = std::make_shared<std::uint64_t>();
      *seq = k.schedule(t, EventKind::LogEmit, [&seen, &k, seq] {
        seen.emplace_back(k.now(), *seq);
      });
    }
    EXPECT_EQ(k.run_until(1000), 200u);
    EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
    EXPECT_EQ(k.now(), 1000);
  }
}

TEST(Kernel, EventsScheduledDuringDispatchRunSameInstantAfterward) {
  Kernel k;
  std::vector<int> order;
  k.schedule(5, EventKind::Inject, [&] {
    order.push_back(1);
    k.schedule(5, EventKind::FailureReport, [&] { order.push_back(3); });
  });
  k.schedule(5, EventKind::LogEmit, [&] {
    order.push_back(2);
    EXPECT_TRUE(k.pending_now());
  });
  k.run_until(5);
  EXPECT_EQ(order, (std::vector<int>{1, 2, 3}));
  EXPECT_FALSE(k.pending_now());
}

TEST(Kernel, RejectsTimeTravelAndStopsAtHorizon) {
  Kernel k;
  int fired = 0;
  k.schedule(10, EventKind::TelemetryTick, [&] { ++fired; });
  k.schedule(20, EventKind::TelemetryTick, [&] { ++fired; });
  EXPECT_EQ(k.run_until(15), 1u);
  EXPECT_EQ(k.now(), 15);
  EXPECT_THROW(k.schedule(14, EventKind::Restore, [] {}), TimeTravel);
  EXPECT_EQ(k.pending(), 1u);
  k.run_until(20);
  EXPECT_EQ(fired, 2);
  EXPECT_EQ(k.dispatched(), 2u);
}

TEST(Rng, SeededStreamsRepeat) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    auto x = a.below(1000);
    EXPECT_EQ(x, b.below(1000));
    EXPECT_LT(x, 1000u);
    differs |= x != c.below(1000);
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(a.below(0), std::invalid_argument);
}

TEST(Workload, ClassBoundaries) {
  EXPECT_EQ(classify(64), ScaleClass::Nano);
  EXPECT_EQ(classify(511), ScaleClass::Nano);
  EXPECT_EQ(classify(512), ScaleClass::Small);
  EXPECT_EQ(classify(1023), ScaleClass::Small);
  EXPECT_EQ(classify(1024), ScaleClass::Medium);
  EXPECT_EQ(classify(4095), ScaleClass::Medium);
  EXPECT_EQ(classify(4096), ScaleClass::Large);
  EXPECT_EQ(parse_scale_class("medium"), ScaleClass::Medium);
  EXPECT_FALSE(parse_scale_class("huge"));
}

TEST(Workload, DefaultMixFillsContiguousNodes) {
  Topology t({16, 12, 24});
  auto jobs = generate_workload(WorkloadSpec{}, t, 0);
  ASSERT_EQ(jobs.size(), 8u);
  std::size_t total = 0;
  NodeId expect = 0;
  for (const AppJob& j : jobs) {
    EXPECT_EQ(j.scale, classify(j.nodes.size()));
    for (NodeId n : j.nodes) EXPECT_EQ(n, expect++);
    total += j.nodes.size();
  }
  EXPECT_EQ(total, 5u * 512 + 2 * 1024 + 4096);
}

TEST(Workload, RejectsOversizeAndMisclassified) {
  Topology t({4, 4, 4});
  WorkloadSpec spec;
  EXPECT_THROW(generate_workload(spec, t), InsufficientNodes);
  spec.counts = {1, 0, 0, 0};
  spec.nodes_per[0] = 600;
  EXPECT_THROW(generate_workload(spec, t), std::invalid_argument);
}

TEST(Workload, NodeFailureKillsOnlyOwners) {
  AppJob job;
  job.nodes = {4, 5, 6};
  EXPECT_FALSE(on_node_failure(job, 9, 100));
  EXPECT_TRUE(on_node_failure(job, 5, 200));
  EXPECT_EQ(job.status, JobStatus::Killed);
  EXPECT_EQ(job.reason, kReasonNodeFailed);
  EXPECT_EQ(job.end, 200);
  EXPECT_FALSE(on_node_failure(job, 4, 300));
}

TEST(Traffic, TwoNodeFlowTracedByHand) {
  Topology t({4, 4, 4});
  FabricState f(t);
  RouteTable table = compute_routes(t, f);
  // Node 0 sits on router (0,0,0); node 34 on router (1,0,1), id 17.
  AppJob job;
  job.nodes = {0, 34};
  const std::uint64_t rate = 1000;
  auto a = analyze_traffic(t, f, table, {job}, rate);
  EXPECT_EQ(a.flows, 2u);
  EXPECT_EQ(a.delivered, 2u);
  EXPECT_EQ(a.at(0, Direction::XPlus), rate);
  EXPECT_EQ(a.at(t.router_at({1, 0, 0}), Direction::ZPlus), rate);
  EXPECT_EQ(a.at(17, Direction::XMinus), rate);
  EXPECT_EQ(a.at(t.router_at({0, 0, 1}), Direction::ZMinus), rate);
  EXPECT_EQ(std::accumulate(a.rate.begin(), a.rate.end(), std::uint64_t{0}), 4 * rate);

  auto quiet = traffic_demand(t, f, table, {job}, rate, true);
  EXPECT_TRUE(std::all_of(quiet.begin(), quiet.end(), [](auto v) { return v == 0; }));
}

TEST(Traffic, StaleRouteStallsFlow) {
  Topology t({4, 4, 4});
  FabricState f(t);
  RouteTable table = compute_routes(t, f);
  for (LinkId l : t.connection_links(0, Direction::XPlus)) f.fail_link(l);
  AppJob job;
  job.nodes = {0, 34};
  auto a = analyze_traffic(t, f, table, {job}, 1);
  EXPECT_EQ(a.stalled, 1u);
  EXPECT_EQ(a.delivered, 1u);
  EXPECT_EQ(a.blocked[0], 1);
  EXPECT_FALSE(a.has_loop());
}

TEST(Traffic, JobsCsv) {
  AppJob job;
  job.id = 3;
  job.nodes = {1, 2};
  job.status = JobStatus::Killed;
  job.reason = "ec_node_failed";
  job.start = 2000;
  job.end = 9500;
  EXPECT_EQ(job_outcomes_csv({job}, 100),
            "job_id,class,nodes,status,reason,start,end\n3,nano,2,killed,ec_node_failed,102,109\n");
}

}  // namespace
}  // namespace faultlab
