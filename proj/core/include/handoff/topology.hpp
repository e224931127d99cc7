#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "handoff/types.hpp"

namespace handoff {

struct NodeSpec {
  NodeId id;
  Tier tier = 0;

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

/// Unordered pair of node ids; `a < b` after normalization.
struct Link {
  NodeId a;
  NodeId b;

  Link() = default;
  Link(NodeId x, NodeId y) : a(std::move(x)), b(std::move(y)) {
    if (b < a) std::swap(a, b);
  }

  friend auto operator<=>(const Link&, const Link&) = default;
  friend bool operator==(const Link&, const Link&) = default;
};

struct Topology {
  std::vector<NodeSpec> nodes;
  std::set<Link> links;

  std::optional<Tier> tier_of(const NodeId& id) const;
  bool linked(const NodeId& x, const NodeId& y) const { return links.contains(Link(x, y)); }
  /// Neighbors of every node, sorted by id.
  std::map<NodeId, std::vector<NodeId>> adjacency() const;
  Tier max_tier() const;
};

struct TopologyViolation {
  std::string kind;
  std::string detail;

  friend bool operator==(const TopologyViolation&, const TopologyViolation&) = default;
};

// Violation kinds reported by validate_topology.
inline constexpr const char* kBadNodeId = "invalid node id";
inline constexpr const char* kDuplicateNode = "duplicate node";
inline constexpr const char* kUnknownLinkEndpoint = "link references unknown node";
inline constexpr const char* kSelfLink = "self link";
inline constexpr const char* kTier0NotConnected = "tier-0 not connected";
inline constexpr const char* kNoDescendingPath = "no descending path";
inline constexpr const char* kSmallerNeighborsNotLinked = "smaller-tier neighbors not linked";

/// Checks the structural assumptions handoff counters rely on: links are
/// bidirectional (by construction), tier 0 nodes form a connected subgraph,
/// every node reaches tier 0 along strictly decreasing tiers, and any two
/// smaller-tier neighbors of a node are linked to each other.
/// An empty result means the topology is valid.
std::vector<TopologyViolation> validate_topology(const Topology& t);

/// Datacenter layout: tier 0 nodes form a clique across datacenters; within a
/// datacenter tier 1 nodes form a clique and link to every local tier 0 node;
/// each client links to `client_fanout` consecutive tier 1 nodes of its
/// datacenter, starting at its home server.
struct DatacenterLayout {
  std::size_t datacenters = 1;
  std::size_t tier0_per_dc = 1;
  std::size_t tier1_per_dc = 1;
  std::size_t clients_per_tier1 = 0;
  std::size_t client_fanout = 1;
};

Topology generate_datacenter_topology(const DatacenterLayout& layout);

nlohmann::json to_json(const Topology& t);

}  // namespace handoff
