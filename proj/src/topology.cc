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

#include "faultlab/topology.h"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace faultlab {

std::string TorusDims::to_string() const {
  return std::to_string(x) + "x" + std::to_string(y) + "x" + std::to_string(z);
}

TorusDims parse_dims(std::string_view text) {
  std::array<int, 3> v{};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    if (i > 0) {
      if (pos >= text.size() || text[pos] != 'x') {
        throw InvalidDims("dims must look like XxYxZ: " + std::string(text));
      }
      ++pos;
    }
    const char* begin = text.data() + pos;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, v[i]);
    if (ec != std::errc() || ptr == begin) {
      throw InvalidDims("dims must look like XxYxZ: " + std::string(text));
    }
    pos = static_cast<std::size_t>(ptr - text.data());
  }
  if (pos != text.size()) {
    throw InvalidDims("trailing characters in dims: " + std::string(text));
  }
  return TorusDims{v[0], v[1], v[2]};
}

Direction direction_of_local(int local_index) {
  if (local_index < 0 || local_index >= kLinkEndpointsPerRouter) {
    throw std::out_of_range("local link index out of range");
  }
  for (int i = 5; i >= 0; --i) {
    auto d = static_cast<Direction>(i);
    if (local_index >= first_local_index(d)) return d;
  }
  return Direction::XPlus;
}

std::string_view to_string(Direction d) {
  static constexpr std::array<std::string_view, 6> kNames = {"X+", "X-", "Y+",
                                                             "Y-", "Z+", "Z-"};
  return kNames[static_cast<int>(d)];
}

std::optional<Direction> parse_direction(std::string_view text) {
  for (Direction d : kAllDirections) {
    if (to_string(d) == text) return d;
  }
  return std::nullopt;
}

MalformedCname::MalformedCname(std::string cname, std::size_t offset)
    : std::invalid_argument("malformed cname '" + cname + "' at byte " +
                            std::to_string(offset)),
      offset_(offset) {}

namespace {

std::string blade_prefix(const BladeRef& b) {
  return "c" + std::to_string(b.x) + "-" + std::to_string(b.y) + "c" +
         std::to_string(b.index / 4) + "s" + std::to_string(b.index % 4);
}

BladeRef blade_of(const Coord& c) { return BladeRef{c.x, c.y, c.z / 2}; }

std::string router_suffix(const Coord& c) { return "g" + std::to_string(c.z % 2); }

class CnameParser {
 public:
  explicit CnameParser(std::string_view text) : text_(text) {}

  ComponentRef parse() {
    expect('c');
    int x = number();
    expect('-');
    int y = number();
    expect('c');
    int cage = number();
    expect('s');
    std::size_t slot_at = pos_;
    int slot = number();
    if (slot > 3) fail(slot_at);
    BladeRef blade{x, y, cage * 4 + slot};
    if (at_end()) return blade;

    if (peek() == 'n') {
      ++pos_;
      std::size_t n_at = pos_;
      int n = digit();
      if (n > 3) fail(n_at);
      finish();
      return NodeRef{blade, n};
    }
    expect('g');
    std::size_t g_at = pos_;
    int g = digit();
    if (g > 1) fail(g_at);
    Coord coord{x, y, blade.index * 2 + g};
    if (at_end()) return RouterRef{coord};

    expect('l');
    std::size_t l_at = pos_;
    int local = digit() * 10;
    local += digit();
    if (local >= kLinkEndpointsPerRouter) fail(l_at);
    finish();
    return LinkEndRef{coord, local};
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(std::size_t at) const {
    throw MalformedCname(std::string(text_), at);
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(pos_);
    ++pos_;
  }

  void finish() const {
    if (!at_end()) fail(pos_);
  }

  int digit() {
    if (at_end() || peek() < '0' || peek() > '9') fail(pos_);
    return text_[pos_++] - '0';
  }

  // Decimal without leading zeros, so every component has one spelling.
  int number() {
    std::size_t start = pos_;
    int value = digit();
    while (!at_end() && peek() >= '0' && peek() <= '9') {
      if (value == 0) fail(pos_);
      if (value > 100000) fail(pos_);
      value = value * 10 + digit();
    }
    (void)start;
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_cname(const ComponentRef& ref) {
  return std::visit(
      [](const auto& r) -> std::string {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, BladeRef>) {
          return blade_prefix(r);
        } else if constexpr (std::is_same_v<T, RouterRef>) {
          return blade_prefix(blade_of(r.coord)) + router_suffix(r.coord);
        } else if constexpr (std::is_same_v<T, LinkEndRef>) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "l%02d", r.local);
          return blade_prefix(blade_of(r.coord)) + router_suffix(r.coord) + buf;
        } else {
          return blade_prefix(r.blade) + "n" + std::to_string(r.index);
        }
      },
      ref);
}

ComponentRef parse_cname(std::string_view text) { return CnameParser(text).parse(); }

void validate_dims(const TorusDims& dims) {
  if (dims.x < 4 || dims.y < 4 || dims.z < 4) {
    throw InvalidDims("every torus dimension must be >= 4, got " + dims.to_string());
  }
  if (dims.z % 2 != 0) {
    throw InvalidDims("z must be even (two routers per blade), got " + dims.to_string());
  }
}

Topology::Topology(TorusDims dims) : dims_(dims) {
  validate_dims(dims);
  const auto n = static_cast<std::size_t>(dims.router_count());
  routers_.resize(n);
  for (int x = 0; x < dims.x; ++x) {
    for (int y = 0; y < dims.y; ++y) {
      for (int z = 0; z < dims.z; ++z) {
        Coord c{x, y, z};
        RouterId id = router_at(c);
        Router& r = routers_[id];
        r.id = id;
        r.coord = c;
        r.blade = id / 2;
        r.nodes = {id * 2, id * 2 + 1};
        for (Direction d : kAllDirections) {
          r.peers[static_cast<int>(d)] = router_at(neighbor(c, d));
        }
      }
    }
  }

  blades_.resize(n / 2);
  for (BladeId b = 0; b < blades_.size(); ++b) {
    const Router& lo = routers_[b * 2];
    blades_[b] = Blade{b,
                       BladeRef{lo.coord.x, lo.coord.y, lo.coord.z / 2},
                       {b * 2, b * 2 + 1},
                       {b * 4, b * 4 + 1, b * 4 + 2, b * 4 + 3}};
  }

  // One link per (router, positive direction, lane bundle index); the
  // negative-side endpoint lives on the neighbor.
  links_.reserve(n * kLinkEndpointsPerRouter / 2);
  for (RouterId r = 0; r < n; ++r) {
    for (Direction d : {Direction::XPlus, Direction::YPlus, Direction::ZPlus}) {
      RouterId p = peer(r, d);
      for (int i = 0; i < links_in(d); ++i) {
        auto id = static_cast<LinkId>(links_.size());
        auto near = static_cast<std::uint8_t>(first_local_index(d) + i);
        auto far = static_cast<std::uint8_t>(first_local_index(opposite(d)) + i);
        links_.push_back(Link{id, {LinkEndpoint{r, near}, LinkEndpoint{p, far}}});
        routers_[r].links[near] = id;
        routers_[p].links[far] = id;
      }
    }
  }
}

bool Topology::contains(const Coord& c) const {
  return c.x >= 0 && c.x < dims_.x && c.y >= 0 && c.y < dims_.y && c.z >= 0 &&
         c.z < dims_.z;
}

RouterId Topology::router_at(const Coord& c) const {
  return static_cast<RouterId>((c.x * dims_.y + c.y) * dims_.z + c.z);
}

Coord Topology::neighbor(const Coord& c, Direction d) const {
  Coord out = c;
  int step = is_positive(d) ? 1 : -1;
  switch (dimension_of(d)) {
    case 0: out.x = (c.x + step + dims_.x) % dims_.x; break;
    case 1: out.y = (c.y + step + dims_.y) % dims_.y; break;
    default: out.z = (c.z + step + dims_.z) % dims_.z; break;
  }
  return out;
}

std::span<const LinkId> Topology::connection_links(RouterId r, Direction d) const {
  const auto& all = routers_.at(r).links;
  return std::span<const LinkId>(all).subspan(first_local_index(d), links_in(d));
}

const LinkEndpoint& Topology::endpoint_on(LinkId link, RouterId r) const {
  const Link& l = links_.at(link);
  return l.ends[0].router == r ? l.ends[0] : l.ends[1];
}

std::string Topology::router_cname(RouterId r) const {
  return format_cname(RouterRef{routers_.at(r).coord});
}

std::string Topology::blade_cname(BladeId b) const {
  return format_cname(blades_.at(b).ref);
}

std::string Topology::node_cname(NodeId n) const {
  BladeId b = n / 4;
  return format_cname(NodeRef{blades_.at(b).ref, static_cast<int>(n % 4)});
}

std::string Topology::endpoint_cname(const LinkEndpoint& e) const {
  return format_cname(LinkEndRef{routers_.at(e.router).coord, e.local});
}

std::string Topology::link_cname(LinkId l) const {
  return endpoint_cname(links_.at(l).ends[0]);
}

RouterId Topology::resolve_router(const ComponentRef& ref) const {
  const auto* r = std::get_if<RouterRef>(&ref);
  if (r == nullptr) throw UnknownComponent("cname does not name a router");
  if (!contains(r->coord)) throw UnknownComponent("router outside the torus");
  return router_at(r->coord);
}

BladeId Topology::resolve_blade(const ComponentRef& ref) const {
  const auto* b = std::get_if<BladeRef>(&ref);
  if (b == nullptr) throw UnknownComponent("cname does not name a blade");
  Coord lo{b->x, b->y, b->index * 2};
  if (!contains(lo)) throw UnknownComponent("blade outside the torus");
  return router_at(lo) / 2;
}

NodeId Topology::resolve_node(const ComponentRef& ref) const {
  const auto* n = std::get_if<NodeRef>(&ref);
  if (n == nullptr) throw UnknownComponent("cname does not name a node");
  BladeId b = resolve_blade(n->blade);
  return b * 4 + static_cast<NodeId>(n->index);
}

LinkEndpoint Topology::resolve_link_end(const ComponentRef& ref) const {
  const auto* e = std::get_if<LinkEndRef>(&ref);
  if (e == nullptr) throw UnknownComponent("cname does not name a link");
  if (!contains(e->coord)) throw UnknownComponent("link outside the torus");
  return LinkEndpoint{router_at(e->coord), static_cast<std::uint8_t>(e->local)};
}

int torus_distance(const TorusDims& dims, const Coord& a, const Coord& b) {
  const std::array<int, 3> size = {dims.x, dims.y, dims.z};
  int total = 0;
  for (int dim = 0; dim < 3; ++dim) {
    int plus = ((b[dim] - a[dim]) % size[dim] + size[dim]) % size[dim];
    total += std::min(plus, size[dim] - plus);
  }
  return total;
}

FabricState::FabricState(const Topology& topo)
    : topo_(&topo),
      links_(topo.link_count(), LinkState::Up),
      routers_(topo.router_count(), 1),
      nodes_(topo.node_count(), 1) {}

int FabricState::up_links(RouterId r, Direction d) const {
  int up = 0;
  for (LinkId l : topo_->connection_links(r, d)) {
    if (links_[l] == LinkState::Up) ++up;
  }
  return up;
}

bool FabricState::connection_usable(RouterId r, Direction d) const {
  for (LinkId l : topo_->connection_links(r, d)) {
    if (links_[l] != LinkState::Down) return true;
  }
  return false;
}

bool FabricState::fail_link(LinkId l) {
  if (links_.at(l) == LinkState::Down) {
    throw AlreadyDown("link " + topo_->link_cname(l) + " is already down");
  }
  links_[l] = LinkState::Down;
  ++version_;
  const LinkEndpoint& e = topo_->link(l).ends[0];
  bool was_last = up_links(e.router, e.direction()) == 0;
  demote_if_disconnected(l);
  return was_last;
}

void FabricState::mask_link(LinkId l) {
  if (links_.at(l) != LinkState::Down) return;
  const LinkEndpoint& e = topo_->link(l).ends[0];
  if (up_links(e.router, e.direction()) == 0) {
    throw LastLink("masking " + topo_->link_cname(l) + " would down its connection");
  }
  links_[l] = LinkState::Masked;
  ++version_;
}

bool FabricState::restore_link(LinkId l) {
  if (links_.at(l) == LinkState::Up) return false;
  links_[l] = LinkState::Up;
  ++version_;
  return true;
}

void FabricState::demote_if_disconnected(LinkId l) {
  const LinkEndpoint& e = topo_->link(l).ends[0];
  if (up_links(e.router, e.direction()) > 0) return;
  for (LinkId sibling : topo_->connection_links(e.router, e.direction())) {
    links_[sibling] = LinkState::Down;
  }
}

void FabricState::fail_router(RouterId r) {
  routers_.at(r) = 0;
  for (LinkId l : topo_->router(r).links) {
    links_[l] = LinkState::Down;
  }
  for (NodeId n : topo_->router(r).nodes) nodes_[n] = 0;
  ++version_;
}

void FabricState::restore_router(RouterId r) {
  routers_.at(r) = 1;
  ++version_;
}

}  // namespace faultlab
