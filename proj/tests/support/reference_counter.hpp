#pragma once

// Direct integer transcription of the handoff counter operations, written
// independently of the generic library: plain ints, string ids, one merge
// function with the stages inline. Used as the oracle for generic/specific
// agreement.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>

#include "handoff/counter.hpp"

namespace ref {

using u64 = std::uint64_t;

struct State {
  std::string id;
  unsigned tier = 0;
  u64 val = 0;
  u64 below = 0;
  std::map<std::string, u64> vals;
  u64 sck = 0;
  u64 dck = 0;
  std::map<std::string, std::pair<u64, u64>> slots;
  std::map<std::pair<std::string, std::string>, std::tuple<u64, u64, u64>> tokens;  // (sck, dck, n)
};

inline State init(const std::string& id, unsigned tier) {
  State s;
  s.id = id;
  s.tier = tier;
  s.vals[id] = 0;
  return s;
}

inline State incr(State s) {
  s.val += 1;
  s.vals[s.id] += 1;
  return s;
}

inline u64 get(const std::map<std::string, u64>& m, const std::string& k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

inline State merge(State a, const State& b) {
  // fillslots
  for (const auto& [key, tok] : b.tokens) {
    const auto& [src, dst] = key;
    if (dst != a.id) continue;
    auto it = a.slots.find(src);
    if (it == a.slots.end()) continue;
    if (it->second.first != std::get<0>(tok) || it->second.second != std::get<1>(tok)) continue;
    a.vals[a.id] += std::get<2>(tok);
    a.slots.erase(it);
  }
  // discardslot
  if (auto it = a.slots.find(b.id); it != a.slots.end() && b.sck > it->second.first) a.slots.erase(it);
  // createslot
  if (a.tier < b.tier && get(b.vals, b.id) > 0 && a.slots.count(b.id) == 0) {
    a.slots[b.id] = {b.sck, a.dck};
    a.dck += 1;
  }
  // mergevectors
  if (a.tier == 0 && b.tier == 0) {
    for (const auto& [k, v] : b.vals) a.vals[k] = std::max(a.vals[k], v);
  }
  // aggregate
  u64 nb = a.below;
  if (a.tier == b.tier) nb = std::max(a.below, b.below);
  if (a.tier > b.tier) nb = std::max(a.below, b.val);
  u64 nv = 0;
  if (a.tier == 0) {
    for (const auto& [_, v] : a.vals) nv += v;
  } else if (a.tier == b.tier) {
    nv = std::max({a.val, b.val, nb + get(a.vals, a.id) + get(b.vals, b.id)});
  } else {
    nv = std::max(a.val, nb + get(a.vals, a.id));
  }
  a.below = nb;
  a.val = nv;
  // discardtokens
  for (auto it = a.tokens.begin(); it != a.tokens.end();) {
    const auto& [src, dst] = it->first;
    bool drop = false;
    if (dst == b.id) {
      auto slot = b.slots.find(src);
      drop = slot != b.slots.end() ? slot->second.second > std::get<1>(it->second) : b.dck > std::get<1>(it->second);
    }
    it = drop ? a.tokens.erase(it) : std::next(it);
  }
  // createtoken
  if (auto it = b.slots.find(a.id); it != b.slots.end() && it->second.first == a.sck) {
    a.tokens[{a.id, b.id}] = {it->second.first, it->second.second, a.vals[a.id]};
    a.vals[a.id] = 0;
    a.sck += 1;
  }
  // cachetokens
  if (a.tier < b.tier) {
    for (const auto& [key, tok] : b.tokens) {
      if (key.first != b.id || key.second == a.id) continue;
      auto it = a.tokens.find(key);
      if (it == a.tokens.end() || std::get<0>(it->second) < std::get<0>(tok)) a.tokens[key] = tok;
    }
  }
  return a;
}

/// Field-by-field comparison with a library state; returns the first
/// differing field name, or an empty string.
inline std::string diff(const State& r, const handoff::CounterState& c) {
  if (r.id != c.id.str()) return "id";
  if (r.tier != c.tier) return "tier";
  if (r.val != c.val) return "val";
  if (r.below != c.below) return "below";
  if (r.sck != c.sck) return "sck";
  if (r.dck != c.dck) return "dck";
  if (r.vals.size() != c.vals.size()) return "vals";
  for (const auto& [k, v] : c.vals) {
    auto it = r.vals.find(k.str());
    if (it == r.vals.end() || it->second != v) return "vals";
  }
  if (r.slots.size() != c.slots.size()) return "slots";
  for (const auto& [k, ck] : c.slots) {
    auto it = r.slots.find(k.str());
    if (it == r.slots.end() || it->second != std::make_pair(ck.sck, ck.dck)) return "slots";
  }
  if (r.tokens.size() != c.tokens.size()) return "tokens";
  for (const auto& [k, t] : c.tokens) {
    auto it = r.tokens.find({k.src.str(), k.dst.str()});
    if (it == r.tokens.end() || it->second != std::make_tuple(t.ck.sck, t.ck.dck, t.n)) return "tokens";
  }
  return {};
}

}  // namespace ref
