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
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace faultlab {

using RouterId = std::uint32_t;
using BladeId = std::uint32_t;
using NodeId = std::uint32_t;
using LinkId = std::uint32_t;

/// Router counts per torus dimension.
struct TorusDims {
  int x = 16;
  int y = 12;
  int z = 24;

  std::int64_t router_count() const {
    return static_cast<std::int64_t>(x) * y * z;
  }
  std::string to_string() const;
  friend bool operator==(const TorusDims&, const TorusDims&) = default;
};

/// Parses "XxYxZ".
TorusDims parse_dims(std::string_view text);
/// Throws InvalidDims unless every dimension is at least 4 and z is even.
void validate_dims(const TorusDims& dims);

struct Coord {
  int x = 0;
  int y = 0;
  int z = 0;

  int operator[](int dim) const { return dim == 0 ? x : (dim == 1 ? y : z); }
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

enum class Direction : std::uint8_t { XPlus, XMinus, YPlus, YMinus, ZPlus, ZMinus };

inline constexpr std::array<Direction, 6> kAllDirections = {
    Direction::XPlus, Direction::XMinus, Direction::YPlus,
    Direction::YMinus, Direction::ZPlus, Direction::ZMinus};

inline constexpr int kLinkEndpointsPerRouter = 40;
inline constexpr int kLanesPerLink = 3;
inline constexpr int kNicsPerRouter = 2;

constexpr int dimension_of(Direction d) { return static_cast<int>(d) / 2; }
constexpr bool is_positive(Direction d) { return static_cast<int>(d) % 2 == 0; }
constexpr Direction opposite(Direction d) {
  return static_cast<Direction>(static_cast<int>(d) ^ 1);
}
/// 8 links for X and Z connections, 4 for Y.
constexpr int links_in(Direction d) { return dimension_of(d) == 1 ? 4 : 8; }
/// First local link index of a direction: X+ 0-7, X- 8-15, Y+ 16-19,
/// Y- 20-23, Z+ 24-31, Z- 32-39.
constexpr int first_local_index(Direction d) {
  constexpr std::array<int, 6> kFirst = {0, 8, 16, 20, 24, 32};
  return kFirst[static_cast<int>(d)];
}
Direction direction_of_local(int local_index);

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

class InvalidDims : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MalformedCname : public std::invalid_argument {
 public:
  MalformedCname(std::string cname, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised when a well-formed cname names a component outside the torus.
class UnknownComponent : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Structural component references. These carry the fields encoded in a
// cname and are independent of any particular topology instance.
struct BladeRef {
  int x = 0;
  int y = 0;
  int index = 0;  // position along Z; routers 2*index and 2*index+1
  friend auto operator<=>(const BladeRef&, const BladeRef&) = default;
};
struct RouterRef {
  Coord coord;
  friend auto operator<=>(const RouterRef&, const RouterRef&) = default;
};
struct LinkEndRef {
  Coord coord;
  int local = 0;  // 0..39
  friend auto operator<=>(const LinkEndRef&, const LinkEndRef&) = default;
};
struct NodeRef {
  BladeRef blade;
  int index = 0;  // 0..3 within the blade
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};
using ComponentRef = std::variant<BladeRef, RouterRef, LinkEndRef, NodeRef>;

/// Synthetic, bijective cname grammar:
///   blade  c<x>-<y>c<cage>s<slot>        cage = k / 4, slot = k % 4
///   router <blade>g<g>                   g = z % 2
///   link   <router>l<nn>                 nn = local link index, two digits
///   node   <blade>n<n>                   n = 2 * g + nic
/// Not the vendor's physical mapping.
std::string format_cname(const ComponentRef& ref);
ComponentRef parse_cname(std::string_view text);

struct LinkEndpoint {
  RouterId router = 0;
  std::uint8_t local = 0;

  Direction direction() const { return direction_of_local(local); }
  friend bool operator==(const LinkEndpoint&, const LinkEndpoint&) = default;
};

struct Link {
  LinkId id = 0;
  // ends[0] is the positive-direction side and names the link canonically.
  std::array<LinkEndpoint, 2> ends;
};

struct Router {
  RouterId id = 0;
  Coord coord;
  BladeId blade = 0;
  std::array<NodeId, kNicsPerRouter> nodes{};
  std::array<RouterId, 6> peers{};
  std::array<LinkId, kLinkEndpointsPerRouter> links{};  // by local index
};

struct Blade {
  BladeId id = 0;
  BladeRef ref;
  std::array<RouterId, 2> asics{};
  std::array<NodeId, 4> nodes{};
};

/// Immutable 3D torus of Gemini-class routers. Two routers share a blade;
/// each router hosts two nodes and 40 link endpoints grouped into six
/// directional connections.
class Topology {
 public:
  explicit Topology(TorusDims dims);

  const TorusDims& dims() const { return dims_; }
  std::size_t router_count() const { return routers_.size(); }
  std::size_t blade_count() const { return blades_.size(); }
  std::size_t node_count() const { return routers_.size() * kNicsPerRouter; }
  std::size_t link_count() const { return links_.size(); }

  const Router& router(RouterId id) const { return routers_.at(id); }
  const Blade& blade(BladeId id) const { return blades_.at(id); }
  const Link& link(LinkId id) const { return links_.at(id); }
  std::span<const Router> routers() const { return routers_; }
  std::span<const Blade> blades() const { return blades_; }
  std::span<const Link> links() const { return links_; }

  bool contains(const Coord& c) const;
  RouterId router_at(const Coord& c) const;
  Coord neighbor(const Coord& c, Direction d) const;
  RouterId peer(RouterId r, Direction d) const {
    return routers_[r].peers[static_cast<int>(d)];
  }
  /// Member links of the connection leaving `r` in direction `d`.
  std::span<const LinkId> connection_links(RouterId r, Direction d) const;
  /// The endpoint of `link` that sits on router `r`.
  const LinkEndpoint& endpoint_on(LinkId link, RouterId r) const;

  static RouterId router_of_node(NodeId n) { return n / kNicsPerRouter; }

  std::string router_cname(RouterId r) const;
  std::string blade_cname(BladeId b) const;
  std::string node_cname(NodeId n) const;
  std::string link_cname(LinkId l) const;
  std::string endpoint_cname(const LinkEndpoint& e) const;

  // Resolution of structural references against this torus. Throws
  // UnknownComponent when out of range or of the wrong kind.
  RouterId resolve_router(const ComponentRef& ref) const;
  BladeId resolve_blade(const ComponentRef& ref) const;
  NodeId resolve_node(const ComponentRef& ref) const;
  LinkEndpoint resolve_link_end(const ComponentRef& ref) const;

 private:
  TorusDims dims_;
  std::vector<Router> routers_;
  std::vector<Blade> blades_;
  std::vector<Link> links_;
};

/// Torus distance (with wraparound) summed over the three dimensions.
int torus_distance(const TorusDims& dims, const Coord& a, const Coord& b);

enum class LinkState : std::uint8_t { Up, Masked, Down };

class AlreadyDown : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};
class LastLink : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Mutable health of the fabric: per-link state plus router and node power.
/// Maintains the invariant that a connection with no Up link has every
/// member link Down.
class FabricState {
 public:
  explicit FabricState(const Topology& topo);

  const Topology& topology() const { return *topo_; }

  LinkState link_state(LinkId l) const { return links_[l]; }
  bool router_alive(RouterId r) const { return routers_[r] != 0; }
  bool node_alive(NodeId n) const { return nodes_[n] != 0; }

  int up_links(RouterId r, Direction d) const;
  bool connection_usable(RouterId r, Direction d) const;

  /// Up/Masked -> Down. Throws AlreadyDown. Returns true when this failure
  /// took the last Up link of its connection.
  bool fail_link(LinkId l);
  /// Down -> Masked; throws LastLink if no sibling link is Up.
  void mask_link(LinkId l);
  /// Any -> Up. Returns false if the link was already Up.
  bool restore_link(LinkId l);

  void fail_router(RouterId r);
  void restore_router(RouterId r);
  void fail_node(NodeId n) {
    nodes_[n] = 0;
    ++version_;
  }
  void restore_node(NodeId n) {
    nodes_[n] = 1;
    ++version_;
  }

  std::span<const LinkState> link_states() const { return links_; }
  std::uint64_t version() const { return version_; }

 private:
  void demote_if_disconnected(LinkId l);

  const Topology* topo_;
  std::vector<LinkState> links_;
  std::vector<std::uint8_t> routers_;
  std::vector<std::uint8_t> nodes_;
  std::uint64_t version_ = 0;
};

}  // namespace faultlab
