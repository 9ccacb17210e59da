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

#include <set>

#include "faultlab/topology.h"

namespace faultlab {
namespace {

// Counts by brute enumeration of router pairs and direction bundles.
struct Census {
  std::int64_t routers = 0, blades = 0, nodes = 0, links = 0;
};

Census enumerate(const TorusDims& d) {
  Census c;
  std::set<std::tuple<int, int, int>> blades;
  for (int x = 0; x < d.x; ++x)
    for (int y = 0; y < d.y; ++y)
      for (int z = 0; z < d.z; ++z) {
        ++c.routers;
        c.nodes += 2;
        blades.insert({x, y, z / 2});
        // Count each bundle once from its positive side.
        c.links += 8 + 4 + 8;
      }
  c.blades = static_cast<std::int64_t>(blades.size());
  return c;
}

TEST(Topology, CountsMatchEnumeration) {
  for (TorusDims d : {TorusDims{16, 12, 24}, TorusDims{4, 4, 4}, TorusDims{5, 6, 8}}) {
    Topology t(d);
    Census c = enumerate(d);
    EXPECT_EQ(static_cast<std::int64_t>(t.router_count()), c.routers);
    EXPECT_EQ(static_cast<std::int64_t>(t.blade_count()), c.blades);
    EXPECT_EQ(static_cast<std::int64_t>(t.node_count()), c.nodes);
    EXPECT_EQ(static_cast<std::int64_t>(t.link_count()), c.links);
  }
  Topology full({16, 12, 24});
  EXPECT_EQ(full.router_count(), 4608u);
  EXPECT_EQ(full.blade_count(), 2304u);
  EXPECT_EQ(full.node_count(), 9216u);
  EXPECT_EQ(full.link_count(), 92160u);
}

TEST(Topology, EveryEndpointUsedOnce) {
  Topology t({4, 4, 6});
  std::set<std::pair<RouterId, int>> seen;
  for (const Link& l : t.links()) {
    for (const auto& e : l.ends) {
      EXPECT_TRUE(seen.insert({e.router, e.local}).second);
      EXPECT_EQ(t.router(e.router).links[e.local], l.id);
    }
    EXPECT_EQ(l.ends[0].direction(), opposite(l.ends[1].direction()));
    EXPECT_TRUE(is_positive(l.ends[0].direction()));
  }
  EXPECT_EQ(seen.size(), t.router_count() * kLinkEndpointsPerRouter);
}

TEST(Topology, LocalLayout) {
  EXPECT_EQ(direction_of_local(0), Direction::XPlus);
  EXPECT_EQ(direction_of_local(15), Direction::XMinus);
  EXPECT_EQ(direction_of_local(16), Direction::YPlus);
  EXPECT_EQ(direction_of_local(23), Direction::YMinus);
  EXPECT_EQ(direction_of_local(24), Direction::ZPlus);
  EXPECT_EQ(direction_of_local(39), Direction::ZMinus);
  EXPECT_THROW(direction_of_local(40), std::out_of_range);
  EXPECT_EQ(links_in(Direction::YMinus), 4);
  EXPECT_EQ(links_in(Direction::ZPlus), 8);
}

TEST(Topology, WraparoundNeighbors) {
  Topology t({4, 4, 4});
  EXPECT_EQ(t.neighbor({3, 0, 0}, Direction::XPlus), (Coord{0, 0, 0}));
  EXPECT_EQ(t.neighbor({0, 0, 0}, Direction::YMinus), (Coord{0, 3, 0}));
  EXPECT_EQ(t.neighbor({1, 2, 3}, Direction::ZPlus), (Coord{1, 2, 0}));
  for (const Router& r : t.routers())
    for (Direction d : kAllDirections)
      EXPECT_EQ(t.peer(t.peer(r.id, d), opposite(d)), r.id);
}

TEST(Topology, TorusDistance) {
  TorusDims d{16, 12, 24};
  EXPECT_EQ(torus_distance(d, {0, 0, 0}, {15, 0, 0}), 1);
  EXPECT_EQ(torus_distance(d, {0, 0, 0}, {8, 6, 12}), 26);
  EXPECT_EQ(torus_distance(d, {2, 3, 4}, {2, 3, 4}), 0);
}

TEST(Cname, KnownNames) {
  Topology t({16, 12, 24});
  RouterId r = t.router_at({9, 4, 5});
  EXPECT_EQ(t.router_cname(r), "c9-4c0s2g1");
  EXPECT_EQ(t.blade_cname(t.router(r).blade), "c9-4c0s2");
  EXPECT_EQ(t.router_cname(t.router_at({11, 8, 22})), "c11-8c2s3g0");
  EXPECT_EQ(t.node_cname(t.router(t.router_at({11, 8, 22})).nodes[0]), "c11-8c2s3n0");
  EXPECT_EQ(format_cname(LinkEndRef{{1, 2, 2}, 3}), "c1-2c0s1g0l03");
}

TEST(Cname, RoundTripAllComponents) {
  Topology t({4, 4, 8});
  for (const Router& r : t.routers()) {
    auto name = t.router_cname(r.id);
    EXPECT_EQ(format_cname(parse_cname(name)), name);
    EXPECT_EQ(t.resolve_router(parse_cname(name)), r.id);
    for (int local = 0; local < kLinkEndpointsPerRouter; ++local) {
      LinkEndpoint e{r.id, static_cast<std::uint8_t>(local)};
      auto ln = t.endpoint_cname(e);
      EXPECT_EQ(t.resolve_link_end(parse_cname(ln)), e);
    }
  }
  for (NodeId n = 0; n < t.node_count(); ++n)
    EXPECT_EQ(t.resolve_node(parse_cname(t.node_cname(n))), n);
  for (const Blade& b : t.blades())
    EXPECT_EQ(t.resolve_blade(parse_cname(t.blade_cname(b.id))), b.id);
}

TEST(Cname, Malformed) {
  for (const char* bad : {"", "c", "x1-2c0s0", "c1-2c0s4", "c1-2c0s0g2", "c1-2c0s0g0l40",
                          "c1-2c0s0n4", "c1-2c0s0g0x", "c1_2c0s0"}) {
    EXPECT_THROW(parse_cname(bad), MalformedCname) << bad;
  }
  try {
    parse_cname("c1-2c0s9");
    FAIL();
  } catch (const MalformedCname& e) {
    EXPECT_EQ(e.offset(), 7u);
  }
}

TEST(Cname, OutOfRangeOrWrongKind) {
  Topology t({4, 4, 4});
  EXPECT_THROW(t.resolve_router(parse_cname("c4-0c0s0g0")), UnknownComponent);
  EXPECT_THROW(t.resolve_router(parse_cname("c0-0c0s0")), UnknownComponent);
  EXPECT_THROW(t.resolve_blade(parse_cname("c0-0c0s2")), UnknownComponent);
}

TEST(Dims, ParseAndValidate) {
  EXPECT_EQ(parse_dims("16x12x24"), (TorusDims{16, 12, 24}));
  EXPECT_THROW(parse_dims("16x12"), InvalidDims);
  EXPECT_THROW(parse_dims("16x12x24x"), InvalidDims);
  EXPECT_THROW(validate_dims({3, 4, 4}), InvalidDims);
  EXPECT_THROW(validate_dims({4, 4, 5}), InvalidDims);
  EXPECT_NO_THROW(validate_dims({4, 4, 4}));
}

TEST(Fabric, MaskAndDemote) {
  Topology t({4, 4, 4});
  FabricState f(t);
  auto links = t.connection_links(0, Direction::YPlus);
  ASSERT_EQ(links.size(), 4u);
  EXPECT_FALSE(f.fail_link(links[0]));
  f.mask_link(links[0]);
  EXPECT_EQ(f.link_state(links[0]), LinkState::Masked);
  EXPECT_EQ(f.up_links(0, Direction::YPlus), 3);
  EXPECT_NO_THROW(f.fail_link(links[0]));
  EXPECT_EQ(f.link_state(links[0]), LinkState::Down);
}

TEST(Fabric, LastLinkAndAlreadyDown) {
  Topology t({4, 4, 4});
  FabricState f(t);
  auto links = t.connection_links(0, Direction::YPlus);
  EXPECT_FALSE(f.fail_link(links[0]));
  f.mask_link(links[0]);
  EXPECT_FALSE(f.fail_link(links[1]));
  EXPECT_FALSE(f.fail_link(links[2]));
  EXPECT_TRUE(f.connection_usable(0, Direction::YPlus));
  EXPECT_THROW(f.fail_link(links[2]), AlreadyDown);
  EXPECT_TRUE(f.fail_link(links[3]));
  EXPECT_FALSE(f.connection_usable(0, Direction::YPlus));
  // The masked sibling lost its connection and counts as down now.
  EXPECT_EQ(f.link_state(links[0]), LinkState::Down);
  EXPECT_THROW(f.mask_link(links[1]), LastLink);
  EXPECT_TRUE(f.restore_link(links[1]));
  EXPECT_FALSE(f.restore_link(links[1]));
  EXPECT_TRUE(f.connection_usable(0, Direction::YPlus));
  EXPECT_EQ(f.up_links(t.peer(0, Direction::YPlus), Direction::YMinus), 1);
}

TEST(Fabric, VersionMovesOnEveryChange) {
  Topology t({4, 4, 4});
  FabricState f(t);
  auto v = f.version();
  f.fail_node(3);
  EXPECT_GT(f.version(), v);
  v = f.version();
  f.fail_router(1);
  EXPECT_FALSE(f.router_alive(1));
  EXPECT_GT(f.version(), v);
  v = f.version();
  f.restore_node(3);
  EXPECT_GT(f.version(), v);
}

}  // namespace
}  // namespace faultlab
