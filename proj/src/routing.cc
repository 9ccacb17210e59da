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

#include "faultlab/routing.h"

#include <algorithm>
#include <array>
#include <deque>
#include <mutex>

namespace faultlab {

namespace {

constexpr std::uint8_t kNoHop = 0xFF;

}  // namespace

UnroutableError::UnroutableError(RoutabilityReport report)
    : std::runtime_error("unroutable topology: " +
                         std::to_string(report.unreachable_pairs) +
                         " unreachable router pairs"),
      report_(std::move(report)) {}

std::optional<Direction> dimension_order_hop(const TorusDims& dims, const Coord& from,
                                             const Coord& to) {
  const std::array<int, 3> size = {dims.x, dims.y, dims.z};
  for (int dim = 0; dim < 3; ++dim) {
    if (from[dim] == to[dim]) continue;
    int plus = ((to[dim] - from[dim]) % size[dim] + size[dim]) % size[dim];
    int minus = size[dim] - plus;
    bool go_plus = plus <= minus;
    return static_cast<Direction>(dim * 2 + (go_plus ? 0 : 1));
  }
  return std::nullopt;
}

struct RouteTable::Shared {
  const Topology* topo = nullptr;
  std::vector<std::uint8_t> usable;  // router * 6 + direction
  std::vector<std::uint8_t> alive;
  bool complete = false;
  std::mutex mu;
  std::vector<std::vector<std::uint8_t>> columns;  // by destination

  bool is_usable(RouterId r, Direction d) const {
    return usable[r * 6 + static_cast<int>(d)] != 0;
  }

  std::vector<std::uint8_t> build_column(RouterId dst) const {
    const auto n = topo->router_count();
    std::vector<std::uint8_t> next(n, kNoHop);
    if (!alive[dst]) return next;

    std::vector<int> dist(n, -1);
    std::deque<RouterId> queue{dst};
    dist[dst] = 0;
    while (!queue.empty()) {
      RouterId r = queue.front();
      queue.pop_front();
      for (Direction d : kAllDirections) {
        RouterId p = topo->peer(r, d);
        if (!is_usable(r, d) || !alive[p] || dist[p] >= 0) continue;
        dist[p] = dist[r] + 1;
        queue.push_back(p);
      }
    }

    // intact[r]: the dimension-ordered path from r to dst uses only usable
    // connections and live routers.
    std::vector<std::int8_t> intact(n, -1);
    intact[dst] = 1;
    const Coord& target = topo->router(dst).coord;
    auto check = [&](auto&& self, RouterId r) -> bool {
      if (intact[r] >= 0) return intact[r] != 0;
      auto d = *dimension_order_hop(topo->dims(), topo->router(r).coord, target);
      RouterId p = topo->peer(r, d);
      bool ok = is_usable(r, d) && alive[p] && self(self, p);
      intact[r] = ok ? 1 : 0;
      return ok;
    };

    for (RouterId r = 0; r < n; ++r) {
      if (r == dst || !alive[r] || dist[r] < 0) continue;
      if (check(check, r)) {
        next[r] = static_cast<std::uint8_t>(
            *dimension_order_hop(topo->dims(), topo->router(r).coord, target));
        continue;
      }
      for (Direction d : kAllDirections) {
        RouterId p = topo->peer(r, d);
        if (is_usable(r, d) && alive[p] && dist[p] == dist[r] - 1) {
          next[r] = static_cast<std::uint8_t>(d);
          break;
        }
      }
    }
    return next;
  }
};

const Topology& RouteTable::topology() const { return *shared_->topo; }

std::optional<Direction> RouteTable::clean_hop(RouterId at, RouterId dst) const {
  Shared& s = *shared_;
  std::uint8_t hop;
  if (s.complete) {
    hop = s.columns[dst][at];
  } else {
    std::lock_guard lock(s.mu);
    if (s.columns[dst].empty()) s.columns[dst] = s.build_column(dst);
    hop = s.columns[dst][at];
  }
  if (hop == kNoHop) return std::nullopt;
  return static_cast<Direction>(hop);
}

std::optional<Direction> RouteTable::next_hop(RouterId at, RouterId dst) const {
  if (at == dst) return std::nullopt;
  auto clean = clean_hop(at, dst);
  if (!corrupted_ || *corrupted_ != at || !clean) return clean;

  // Bounce to a neighbor that forwards this destination back through us.
  const Shared& s = *shared_;
  for (Direction d : kAllDirections) {
    RouterId p = s.topo->peer(at, d);
    if (!s.is_usable(at, d) || !s.alive[p] || p == dst) continue;
    if (clean_hop(p, dst) == opposite(d)) return d;
  }
  for (Direction d : kAllDirections) {
    if (d != *clean && s.is_usable(at, d) && s.alive[s.topo->peer(at, d)]) return d;
  }
  return clean;
}

RouteTable RouteTable::with_corruption(RouterId router) const {
  RouteTable copy = *this;
  copy.corrupted_ = router;
  return copy;
}

RoutabilityReport check_routability(const Topology& topo, const FabricState& fabric) {
  const auto n = topo.router_count();
  std::vector<int> component(n, -1);
  std::vector<std::uint64_t> sizes;
  std::vector<RouterId> first_member;
  for (RouterId start = 0; start < n; ++start) {
    if (!fabric.router_alive(start) || component[start] >= 0) continue;
    int label = static_cast<int>(sizes.size());
    sizes.push_back(0);
    first_member.push_back(start);
    std::deque<RouterId> queue{start};
    component[start] = label;
    while (!queue.empty()) {
      RouterId r = queue.front();
      queue.pop_front();
      ++sizes[label];
      for (Direction d : kAllDirections) {
        RouterId p = topo.peer(r, d);
        if (!fabric.connection_usable(r, d) || !fabric.router_alive(p) ||
            component[p] >= 0) {
          continue;
        }
        component[p] = label;
        queue.push_back(p);
      }
    }
  }

  RoutabilityReport report;
  std::uint64_t live = 0;
  std::uint64_t same = 0;
  for (auto s : sizes) {
    live += s;
    same += s * s;
  }
  report.unreachable_pairs = live * live - same;
  report.routable = report.unreachable_pairs == 0;
  if (!report.routable) {
    // Smallest-id router of the largest component, paired with the
    // smallest-id router of the smallest component.
    auto largest = std::max_element(sizes.begin(), sizes.end()) - sizes.begin();
    auto smallest = std::min_element(sizes.begin(), sizes.end()) - sizes.begin();
    report.witness = std::make_pair(first_member[largest], first_member[smallest]);
  }
  return report;
}

RouteTable compute_routes(const Topology& topo, const FabricState& fabric) {
  RoutabilityReport report = check_routability(topo, fabric);
  if (!report.routable) throw UnroutableError(std::move(report));

  const auto n = topo.router_count();
  auto shared = std::make_shared<RouteTable::Shared>();
  shared->topo = &topo;
  shared->usable.resize(n * 6);
  shared->alive.resize(n);
  for (RouterId r = 0; r < n; ++r) {
    shared->alive[r] = fabric.router_alive(r) ? 1 : 0;
    for (Direction d : kAllDirections) {
      shared->usable[r * 6 + static_cast<int>(d)] = fabric.connection_usable(r, d) ? 1 : 0;
    }
  }
  shared->columns.resize(n);
  if (n <= RouteTable::kEagerRouterLimit) {
    for (RouterId dst = 0; dst < n; ++dst) shared->columns[dst] = shared->build_column(dst);
    shared->complete = true;
  }

  RouteTable table;
  table.shared_ = std::move(shared);
  table.generation_ = fabric.version();
  return table;
}

std::vector<Hop> path_of(const RouteTable& table, RouterId src, RouterId dst) {
  const Topology& topo = table.topology();
  std::vector<Hop> path;
  std::vector<bool> seen(topo.router_count(), false);
  RouterId at = src;
  while (at != dst) {
    if (seen[at]) {
      throw RoutingLoop("routing loop at " + topo.router_cname(at) + " toward " +
                        topo.router_cname(dst));
    }
    seen[at] = true;
    auto hop = table.next_hop(at, dst);
    if (!hop) {
      throw NoRoute("no route from " + topo.router_cname(at) + " to " +
                    topo.router_cname(dst));
    }
    path.push_back(Hop{at, *hop});
    at = topo.peer(at, *hop);
  }
  return path;
}

RouteTrace trace_route(const RouteTable& table, const FabricState& fabric, RouterId src,
                       RouterId dst) {
  const Topology& topo = table.topology();
  RouteTrace trace;
  std::vector<bool> seen(topo.router_count(), false);
  RouterId at = src;
  while (at != dst) {
    if (seen[at]) {
      trace.outcome = RouteTrace::Outcome::Loop;
      trace.stalled_at = at;
      return trace;
    }
    seen[at] = true;
    auto hop = table.next_hop(at, dst);
    RouterId next = hop ? topo.peer(at, *hop) : at;
    if (!hop || !fabric.router_alive(at) || !fabric.connection_usable(at, *hop) ||
        !fabric.router_alive(next)) {
      trace.outcome = RouteTrace::Outcome::Blocked;
      trace.stalled_at = at;
      return trace;
    }
    trace.hops.push_back(Hop{at, *hop});
    at = next;
  }
  return trace;
}

}  // namespace faultlab
