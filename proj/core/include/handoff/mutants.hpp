#pragma once

// Deliberately broken merges, used to show the checker catches real bugs.

#include <optional>
#include <string_view>

#include "handoff/counter.hpp"

namespace handoff {

enum class Mutant {
  None,
  /// Never discards tokens the destination has acquired.
  SkipDiscardTokens,
  /// Acquires a token into any slot held for its source, ignoring clocks, so
  /// a stale token is acquired a second time into a newer slot.
  FillAnyClock,
  /// Creates slots without advancing the destination clock, so sources never
  /// learn that their tokens were acquired and keep them forever.
  NoDckIncrement,
};

std::string_view to_string(Mutant m);
std::optional<Mutant> parse_mutant(std::string_view s);

namespace mutant_detail {

template <PayloadAlgebra A>
HandoffState<A> fill_any_clock(HandoffState<A> ci, const HandoffState<A>& cj) {
  for (const auto& [key, token] : cj.tokens) {
    if (key.dst != ci.id) continue;
    auto slot = ci.slots.find(key.src);
    if (slot == ci.slots.end()) continue;
    auto& own = ci.vals[ci.id];
    own = A::combine(own, token.n);
    ci.slots.erase(slot);
  }
  return ci;
}

template <PayloadAlgebra A>
HandoffState<A> createslot_without_clock(HandoffState<A> ci, const HandoffState<A>& cj) {
  const auto zero = A::zero();
  if (ci.tier < cj.tier && !(detail::lookup_or(cj.vals, cj.id, zero) == zero) && !ci.slots.contains(cj.id)) {
    ci.slots.emplace(cj.id, ClockPair{cj.sck, ci.dck});
  }
  return ci;
}

}  // namespace mutant_detail

template <PayloadAlgebra A>
HandoffState<A> mutant_merge(Mutant m, HandoffState<A> ci, const HandoffState<A>& cj) {
  if (m == Mutant::None) return merge(std::move(ci), cj);
  ci = m == Mutant::FillAnyClock ? mutant_detail::fill_any_clock(std::move(ci), cj)
                                   : fillslots(std::move(ci), cj);
  ci = discardslot(std::move(ci), cj);
  ci = m == Mutant::NoDckIncrement ? mutant_detail::createslot_without_clock(std::move(ci), cj)
                                   : createslot(std::move(ci), cj);
  ci = mergevectors(std::move(ci), cj);
  ci = aggregate(std::move(ci), cj);
  if (m != Mutant::SkipDiscardTokens) ci = discardtokens(std::move(ci), cj);
  ci = createtoken(std::move(ci), cj);
  ci = cachetokens(std::move(ci), cj);
  return ci;
}

}  // namespace handoff
