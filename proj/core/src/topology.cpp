#include "handoff/topology.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace handoff {

std::optional<Tier> Topology::tier_of(const NodeId& id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return n.tier;
  }
  return std::nullopt;
}

std::map<NodeId, std::vector<NodeId>> Topology::adjacency() const {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& n : nodes) adj[n.id];
  for (const auto& l : links) {
    adj[l.a].push_back(l.b);
    adj[l.b].push_back(l.a);
  }
  for (auto& [_, v] : adj) std::sort(v.begin(), v.end());
  return adj;
}

Tier Topology::max_tier() const {
  Tier t = 0;
  for (const auto& n : nodes) t = std::max(t, n.tier);
  return t;
}

std::vector<TopologyViolation> validate_topology(const Topology& t) {
  std::vector<TopologyViolation> out;
  std::map<NodeId, Tier> tiers;
  for (const auto& n : t.nodes) {
    if (!is_valid_node_id(n.id.str())) out.push_back({kBadNodeId, "\"" + n.id.str() + "\""});
    if (!tiers.emplace(n.id, n.tier).second) out.push_back({kDuplicateNode, n.id.str()});
  }

  std::map<NodeId, std::set<NodeId>> adj;
  for (const auto& [id, _] : tiers) adj[id];
  for (const auto& l : t.links) {
    if (l.a == l.b) {
      out.push_back({kSelfLink, l.a.str()});
      continue;
    }
    bool known = true;
    for (const auto* end : {&l.a, &l.b}) {
      if (!tiers.contains(*end)) {
        out.push_back({kUnknownLinkEndpoint, l.a.str() + "-" + l.b.str() + " (" + end->str() + ")"});
        known = false;
      }
    }
    if (!known) continue;
    adj[l.a].insert(l.b);
    adj[l.b].insert(l.a);
  }

  // Tier 0 connectivity.
  std::vector<NodeId> tier0;
  for (const auto& [id, tier] : tiers) {
    if (tier == 0) tier0.push_back(id);
  }
  if (tier0.empty()) {
    out.push_back({kTier0NotConnected, "no tier 0 node"});
  } else {
    std::set<NodeId> seen{tier0.front()};
    std::deque<NodeId> queue{tier0.front()};
    while (!queue.empty()) {
      auto cur = queue.front();
      queue.pop_front();
      for (const auto& nb : adj[cur]) {
        if (tiers[nb] == 0 && seen.insert(nb).second) queue.push_back(nb);
      }
    }
    for (const auto& id : tier0) {
      if (!seen.contains(id)) out.push_back({kTier0NotConnected, id.str() + " unreachable from " + tier0.front().str()});
    }
  }

  // Strictly descending path to tier 0. Process nodes by increasing tier so
  // every smaller-tier neighbor is already decided.
  std::vector<std::pair<Tier, NodeId>> order;
  for (const auto& [id, tier] : tiers) order.emplace_back(tier, id);
  std::sort(order.begin(), order.end());
  std::set<NodeId> reaches;
  for (const auto& [tier, id] : order) {
    if (tier == 0) {
      reaches.insert(id);
      continue;
    }
    const bool ok = std::any_of(adj[id].begin(), adj[id].end(),
                                [&](const NodeId& nb) { return tiers[nb] < tier && reaches.contains(nb); });
    if (ok) {
      reaches.insert(id);
    } else {
      out.push_back({kNoDescendingPath, id.str()});
    }
  }

  // Smaller-tier neighbors must be pairwise linked.
  for (const auto& [id, tier] : tiers) {
    std::vector<NodeId> smaller;
    for (const auto& nb : adj[id]) {
      if (tiers[nb] < tier) smaller.push_back(nb);
    }
    for (std::size_t x = 0; x < smaller.size(); ++x) {
      for (std::size_t y = x + 1; y < smaller.size(); ++y) {
        if (!adj[smaller[x]].contains(smaller[y])) {
          out.push_back({kSmallerNeighborsNotLinked,
                         id.str() + ": " + smaller[x].str() + " and " + smaller[y].str()});
        }
      }
    }
  }
  return out;
}

Topology generate_datacenter_topology(const DatacenterLayout& layout) {
  if (layout.datacenters == 0 || layout.tier0_per_dc == 0) {
    throw std::invalid_argument("datacenter layout needs at least one datacenter with a tier 0 node");
  }
  if (layout.clients_per_tier1 > 0 && layout.tier1_per_dc == 0) {
    throw std::invalid_argument("clients need tier 1 servers");
  }
  if (layout.clients_per_tier1 > 0 && (layout.client_fanout == 0 || layout.client_fanout > layout.tier1_per_dc)) {
    throw std::invalid_argument("client_fanout must be between 1 and tier1_per_dc");
  }
  Topology t;
  std::vector<NodeId> all_tier0;
  for (std::size_t dc = 0; dc < layout.datacenters; ++dc) {
    const auto prefix = "dc" + std::to_string(dc);
    std::vector<NodeId> t0, t1;
    for (std::size_t k = 0; k < layout.tier0_per_dc; ++k) {
      t0.emplace_back(prefix + "-t0-" + std::to_string(k));
      t.nodes.push_back({t0.back(), 0});
    }
    for (std::size_t k = 0; k < layout.tier1_per_dc; ++k) {
      t1.emplace_back(prefix + "-t1-" + std::to_string(k));
      t.nodes.push_back({t1.back(), 1});
    }
    for (std::size_t x = 0; x < t1.size(); ++x) {
      for (const auto& z : t0) t.links.emplace(t1[x], z);
      for (std::size_t y = x + 1; y < t1.size(); ++y) t.links.emplace(t1[x], t1[y]);
    }
    for (std::size_t s = 0; s < t1.size(); ++s) {
      for (std::size_t c = 0; c < layout.clients_per_tier1; ++c) {
        NodeId client(prefix + "-t2-" + std::to_string(s * layout.clients_per_tier1 + c));
        t.nodes.push_back({client, 2});
        for (std::size_t f = 0; f < layout.client_fanout; ++f) {
          t.links.emplace(client, t1[(s + f) % t1.size()]);
        }
      }
    }
    all_tier0.insert(all_tier0.end(), t0.begin(), t0.end());
  }
  for (std::size_t x = 0; x < all_tier0.size(); ++x) {
    for (std::size_t y = x + 1; y < all_tier0.size(); ++y) t.links.emplace(all_tier0[x], all_tier0[y]);
  }
  return t;
}

nlohmann::json to_json(const Topology& t) {
  auto nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) nodes.push_back({{"id", n.id.str()}, {"tier", n.tier}});
  auto links = nlohmann::json::array();
  for (const auto& l : t.links) links.push_back({l.a.str(), l.b.str()});
  return {{"nodes", std::move(nodes)}, {"links", std::move(links)}};
}

}  // namespace handoff
