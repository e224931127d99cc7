#pragma once

// Handoff counter: a state-based CRDT that hands accounted values down a
// tier hierarchy. Tier 0 nodes keep a version vector of tier 0 entries; every
// other node keeps only its own entry and moves it to a smaller-tier node via
// a slot/token handshake that tolerates loss, duplication and reordering.
//
// All operations are pure: they take states by value or const reference and
// return the new state.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "handoff/payload.hpp"
#include "handoff/types.hpp"

namespace handoff {

template <typename P>
struct Token {
  ClockPair ck;
  P n;

  friend bool operator==(const Token&, const Token&) = default;
};

template <PayloadAlgebra A>
struct HandoffState {
  using Algebra = A;
  using Payload = typename A::Value;

  NodeId id;
  Tier tier = 0;
  Payload val = A::zero();
  Payload below = A::zero();
  std::map<NodeId, Payload> vals;
  Clock sck = 0;
  Clock dck = 0;
  std::map<NodeId, ClockPair> slots;
  std::map<TokenKey, Token<Payload>> tokens;

  /// vals(id); the entry always exists in well-formed states.
  const Payload& self() const {
    auto it = vals.find(id);
    if (it == vals.end()) throw std::logic_error("state " + id.str() + " lacks its self entry");
    return it->second;
  }

  friend bool operator==(const HandoffState&, const HandoffState&) = default;
};

using CounterState = HandoffState<NatAlgebra>;
using MapCounterState = HandoffState<MapAlgebra>;
using PNCounterState = HandoffState<PNAlgebra>;

namespace detail {

template <typename P>
const P& lookup_or(const std::map<NodeId, P>& m, const NodeId& k, const P& fallback) {
  auto it = m.find(k);
  return it == m.end() ? fallback : it->second;
}

}  // namespace detail

template <PayloadAlgebra A>
HandoffState<A> init(NodeId id, Tier tier) {
  HandoffState<A> s;
  s.id = std::move(id);
  s.tier = tier;
  s.vals.emplace(s.id, A::zero());
  return s;
}

inline CounterState init(NodeId id, Tier tier) { return init<NatAlgebra>(std::move(id), tier); }

template <PayloadAlgebra A>
const typename A::Value& fetch(const HandoffState<A>& c) {
  return c.val;
}

/// Applies an inflation to both val and the self entry. `f` must satisfy
/// x <= f(x) and commute with every other mutation.
template <PayloadAlgebra A, typename F>
HandoffState<A> mutate(HandoffState<A> c, F&& f) {
  c.val = f(c.val);
  auto& own = c.vals[c.id];
  own = f(own);
  return c;
}

/// Combines `delta` into val and the self entry.
template <PayloadAlgebra A>
HandoffState<A> add(HandoffState<A> c, const typename A::Value& delta) {
  return mutate(std::move(c), [&](const typename A::Value& x) { return A::combine(x, delta); });
}

inline CounterState incr(CounterState c) { return add(std::move(c), NatAlgebra::Value{1}); }

/// Map-of-counters increment of counter `key`.
template <PayloadAlgebra A>
  requires std::same_as<typename A::Value, MapAlgebra::Value>
HandoffState<A> incr(HandoffState<A> c, std::string_view key) {
  return add(std::move(c), A::unit(key));
}

/// Map-of-counters fetch of counter `key`.
template <PayloadAlgebra A>
  requires std::same_as<typename A::Value, MapAlgebra::Value>
std::uint64_t fetch(const HandoffState<A>& c, std::string_view key) {
  return MapAlgebra::get(c.val, key);
}

inline PNCounterState pn_incr(PNCounterState c) { return incr(std::move(c), PNAlgebra::kPositive); }
inline PNCounterState pn_decr(PNCounterState c) { return incr(std::move(c), PNAlgebra::kNegative); }
inline std::int64_t pn_fetch(const PNCounterState& c) { return pn_fetch(c.val); }

// ---------------------------------------------------------------------------
// Merge transformations. Each takes the output of the previous stage and the
// unmodified received state.

/// Acquires every token in `cj` addressed to `ci` whose clocks match the slot
/// `ci` holds for its source, removing those slots.
template <PayloadAlgebra A>
HandoffState<A> fillslots(HandoffState<A> ci, const HandoffState<A>& cj) {
  auto acquired = A::zero();
  bool any = false;
  for (const auto& [key, token] : cj.tokens) {
    if (key.dst != ci.id) continue;
    auto slot = ci.slots.find(key.src);
    if (slot == ci.slots.end() || slot->second != token.ck) continue;
    acquired = A::combine(acquired, token.n);
    ci.slots.erase(slot);
    any = true;
  }
  if (any) {
    auto& own = ci.vals[ci.id];
    own = A::combine(own, acquired);
  }
  return ci;
}

/// Drops the slot for `cj` once `cj` proves no matching token can appear.
template <PayloadAlgebra A>
HandoffState<A> discardslot(HandoffState<A> ci, const HandoffState<A>& cj) {
  auto slot = ci.slots.find(cj.id);
  if (slot != ci.slots.end() && cj.sck > slot->second.sck) ci.slots.erase(slot);
  return ci;
}

/// Opens a slot for a higher-tier sender that has something to hand off.
template <PayloadAlgebra A>
HandoffState<A> createslot(HandoffState<A> ci, const HandoffState<A>& cj) {
  static const auto kZero = A::zero();
  if (ci.tier < cj.tier && !(detail::lookup_or(cj.vals, cj.id, kZero) == kZero) &&
      !ci.slots.contains(cj.id)) {
    ci.slots.emplace(cj.id, ClockPair{cj.sck, ci.dck});
    ci.dck = checked_increment(ci.dck);
  }
  return ci;
}

/// Pointwise join of version vectors between two tier 0 nodes.
template <PayloadAlgebra A>
HandoffState<A> mergevectors(HandoffState<A> ci, const HandoffState<A>& cj) {
  if (ci.tier == 0 && cj.tier == 0) {
    for (const auto& [k, v] : cj.vals) {
      auto [it, inserted] = ci.vals.try_emplace(k, v);
      if (!inserted) it->second = A::join(it->second, v);
    }
  }
  return ci;
}

/// Vertical aggregation of below and val. `below` is bound first and the new
/// value is used when computing val.
template <PayloadAlgebra A>
HandoffState<A> aggregate(HandoffState<A> ci, const HandoffState<A>& cj) {
  static const auto kZero = A::zero();
  auto b = ci.below;
  if (ci.tier == cj.tier) {
    b = A::join(ci.below, cj.below);
  } else if (ci.tier > cj.tier) {
    b = A::join(ci.below, cj.val);
  }

  typename A::Value v;
  if (ci.tier == 0) {
    v = A::zero();
    for (const auto& [_, n] : ci.vals) v = A::combine(v, n);
  } else if (ci.tier == cj.tier) {
    const auto& own_i = detail::lookup_or(ci.vals, ci.id, kZero);
    const auto& own_j = detail::lookup_or(cj.vals, cj.id, kZero);
    v = A::join(A::join(ci.val, cj.val), A::combine(A::combine(b, own_i), own_j));
  } else {
    const auto& own_i = detail::lookup_or(ci.vals, ci.id, kZero);
    v = A::join(ci.val, A::combine(b, own_i));
  }
  ci.below = std::move(b);
  ci.val = std::move(v);
  return ci;
}

/// Drops tokens addressed to `cj` that `cj` has already acquired: either its
/// slot for the source is newer, or it has no slot and its destination clock
/// has moved past the token's.
template <PayloadAlgebra A>
HandoffState<A> discardtokens(HandoffState<A> ci, const HandoffState<A>& cj) {
  std::erase_if(ci.tokens, [&](const auto& entry) {
    const auto& [key, token] = entry;
    if (key.dst != cj.id) return false;
    auto slot = cj.slots.find(key.src);
    if (slot != cj.slots.end()) return slot->second.dck > token.ck.dck;
    return cj.dck > token.ck.dck;
  });
  return ci;
}

/// Moves the self entry into a token when `cj` holds a slot for this node at
/// the current source clock.
template <PayloadAlgebra A>
HandoffState<A> createtoken(HandoffState<A> ci, const HandoffState<A>& cj) {
  auto slot = cj.slots.find(ci.id);
  if (slot != cj.slots.end() && slot->second.sck == ci.sck) {
    auto& own = ci.vals[ci.id];
    ci.tokens.insert_or_assign(TokenKey{ci.id, cj.id}, Token<typename A::Value>{slot->second, own});
    own = A::zero();
    ci.sck = checked_increment(ci.sck);
  }
  return ci;
}

/// Keeps copies of tokens created by a higher-tier sender for other
/// destinations; per (src, dst) the entry with the larger source clock wins.
template <PayloadAlgebra A>
HandoffState<A> cachetokens(HandoffState<A> ci, const HandoffState<A>& cj) {
  if (ci.tier < cj.tier) {
    for (const auto& [key, token] : cj.tokens) {
      if (key.src != cj.id || key.dst == ci.id) continue;
      auto [it, inserted] = ci.tokens.try_emplace(key, token);
      if (!inserted && !(it->second.ck.sck >= token.ck.sck)) it->second = token;
    }
  }
  return ci;
}

/// Merges a received state into the local one. Stage order matters: each
/// stage sees the previous stage's output.
template <PayloadAlgebra A>
HandoffState<A> merge(HandoffState<A> ci, const HandoffState<A>& cj) {
  if (ci.id == cj.id) {
    throw std::invalid_argument("merge of two states with the same id " + ci.id.str());
  }
  ci = fillslots(std::move(ci), cj);
  ci = discardslot(std::move(ci), cj);
  ci = createslot(std::move(ci), cj);
  ci = mergevectors(std::move(ci), cj);
  ci = aggregate(std::move(ci), cj);
  ci = discardtokens(std::move(ci), cj);
  ci = createtoken(std::move(ci), cj);
  ci = cachetokens(std::move(ci), cj);
  return ci;
}

/// Restricts the state sent to `dst` to the slots `dst` can use: only its own
/// slot when it is a higher tier, none when it is a smaller tier.
template <PayloadAlgebra A>
HandoffState<A> view(HandoffState<A> c, const NodeId& dst, Tier dst_tier) {
  if (c.tier < dst_tier) {
    std::erase_if(c.slots, [&](const auto& entry) { return entry.first != dst; });
  } else if (c.tier > dst_tier) {
    c.slots.clear();
  }
  return c;
}

// ---------------------------------------------------------------------------
// Retirement

/// Token ids created by a node and observed in states received from others.
struct RetirementEvidence {
  std::set<HandoffId> cached;

  friend bool operator==(const RetirementEvidence&, const RetirementEvidence&) = default;
};

/// Records the tokens in `received` that originate at `self`.
template <PayloadAlgebra A>
void record_evidence(RetirementEvidence& ev, const NodeId& self, const HandoffState<A>& received) {
  if (received.id == self) return;
  for (const auto& [key, token] : received.tokens) {
    if (key.src == self) ev.cached.insert(HandoffId{key.src, key.dst, token.ck});
  }
}

/// Nothing left to account locally and no outstanding tokens.
template <PayloadAlgebra A>
bool can_retire(const HandoffState<A>& c) {
  return c.self() == A::zero() && c.tokens.empty();
}

/// Nothing left to account locally and every own token is known to be cached
/// at some other node.
template <PayloadAlgebra A>
bool can_retire_cached(const HandoffState<A>& c, const RetirementEvidence& ev) {
  if (!(c.self() == A::zero())) return false;
  for (const auto& [key, token] : c.tokens) {
    if (key.src != c.id) continue;
    if (!ev.cached.contains(HandoffId{key.src, key.dst, token.ck})) return false;
  }
  return true;
}

/// Structural invariants every reachable state satisfies. Returns an empty
/// string when well formed, otherwise a description of the first problem.
template <PayloadAlgebra A>
std::string shape_violation(const HandoffState<A>& c) {
  if (!c.vals.contains(c.id)) return "vals lacks self entry";
  if (c.tier != 0 && c.vals.size() != 1) return "non-tier-0 vals holds entries besides self";
  for (const auto& [src, _] : c.slots) {
    if (src == c.id) return "slot keyed by own id";
  }
  for (const auto& [key, _] : c.tokens) {
    if (key.src == key.dst) return "token with equal source and destination";
  }
  return {};
}

}  // namespace handoff
