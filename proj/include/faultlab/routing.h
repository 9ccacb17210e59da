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

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "faultlab/topology.h"

namespace faultlab {

struct RoutabilityReport {
  bool routable = true;
  std::uint64_t unreachable_pairs = 0;  // ordered pairs of live routers
  std::optional<std::pair<RouterId, RouterId>> witness;
};

class UnroutableError : public std::runtime_error {
 public:
  explicit UnroutableError(RoutabilityReport report);
  const RoutabilityReport& report() const { return report_; }

 private:
  RoutabilityReport report_;
};

class NoRoute : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RoutingLoop : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Hop {
  RouterId router = 0;
  Direction dir = Direction::XPlus;
  friend bool operator==(const Hop&, const Hop&) = default;
};

/// Dimension-ordered first hop on a fault-free torus: X, then Y, then Z;
/// within a dimension the shorter way round, ties toward +. nullopt when
/// `from == to`.
std::optional<Direction> dimension_order_hop(const TorusDims& dims, const Coord& from,
                                             const Coord& to);

/// Per-router destination -> output direction map computed over one fabric
/// state. Copies share the lazily-built per-destination columns; a table is
/// immutable once built and safe to read from several threads.
class RouteTable {
 public:
  /// Tables up to this many routers are built eagerly.
  static constexpr std::size_t kEagerRouterLimit = 512;

  std::optional<Direction> next_hop(RouterId at, RouterId dst) const;
  std::uint64_t generation() const { return generation_; }
  const Topology& topology() const;

  /// A copy whose entries at `router` bounce traffic back toward the
  /// neighbor it came from, creating forwarding loops.
  RouteTable with_corruption(RouterId router) const;
  std::optional<RouterId> corrupted_router() const { return corrupted_; }

 private:
  friend RouteTable compute_routes(const Topology&, const FabricState&);
  struct Shared;

  std::optional<Direction> clean_hop(RouterId at, RouterId dst) const;

  std::shared_ptr<Shared> shared_;
  std::uint64_t generation_ = 0;
  std::optional<RouterId> corrupted_;
};

/// Connectivity of the live routers over usable connections.
RoutabilityReport check_routability(const Topology& topo, const FabricState& fabric);

/// Dimension-ordered routes where the dimension-ordered path is intact,
/// breadth-first shortest paths (direction order X+,X-,Y+,Y-,Z+,Z-) where it
/// is not. Throws UnroutableError when live routers are disconnected.
RouteTable compute_routes(const Topology& topo, const FabricState& fabric);

/// Concatenated table lookups from src to dst. Throws NoRoute on a missing
/// entry and RoutingLoop when a router repeats.
std::vector<Hop> path_of(const RouteTable& table, RouterId src, RouterId dst);

/// Result of forwarding along an installed table over the live fabric, which
/// may have changed since the table was computed.
struct RouteTrace {
  enum class Outcome { Delivered, Blocked, Loop };
  Outcome outcome = Outcome::Delivered;
  std::vector<Hop> hops;
  RouterId stalled_at = 0;  // router holding the packet when not delivered
};

RouteTrace trace_route(const RouteTable& table, const FabricState& fabric, RouterId src,
                       RouterId dst);

}  // namespace faultlab
