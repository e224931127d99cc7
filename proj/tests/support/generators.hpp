#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "handoff/counter.hpp"
#include "handoff/payload.hpp"

namespace testgen {

using Rng = std::mt19937_64;

inline std::uint64_t small_count(Rng& rng) {
  switch (rng() % 4) {
    case 0: return 0;
    case 1: return rng() % 4;
    case 2: return rng() % 1000;
    default: return rng() % (std::uint64_t{1} << 40);
  }
}

template <typename A>
typename A::Value payload(Rng& rng);

template <>
inline handoff::NatAlgebra::Value payload<handoff::NatAlgebra>(Rng& rng) {
  return small_count(rng);
}

template <>
inline handoff::MapAlgebra::Value payload<handoff::MapAlgebra>(Rng& rng) {
  static const char* kKeys[] = {"a", "b", "c", "d", "e"};
  handoff::MapAlgebra::Value v;
  const auto n = rng() % 5;
  for (std::uint64_t k = 0; k < n; ++k) v[kKeys[rng() % 5]] = small_count(rng);
  handoff::MapAlgebra::normalize(v);
  return v;
}

template <>
inline handoff::PNAlgebra::Value payload<handoff::PNAlgebra>(Rng& rng) {
  handoff::PNAlgebra::Value v;
  if (rng() % 2) v["p"] = small_count(rng);
  if (rng() % 2) v["n"] = small_count(rng);
  handoff::MapAlgebra::normalize(v);
  return v;
}

/// Key for a random increment under payload A.
template <typename A>
std::string increment_key(Rng& rng) {
  if constexpr (std::is_same_v<A, handoff::PNAlgebra>) {
    return rng() % 3 == 0 ? "n" : "p";
  } else if constexpr (std::is_same_v<A, handoff::MapAlgebra>) {
    static const char* kKeys[] = {"x", "y", "z"};
    return kKeys[rng() % 3];
  } else {
    return {};
  }
}

/// A small valid tiered network: two tier-0 nodes, two linked tier-1
/// servers, three clients each linked to both servers.
struct SmallNet {
  std::vector<std::pair<std::string, handoff::Tier>> nodes{
      {"r0", 0}, {"r1", 0}, {"s0", 1}, {"s1", 1}, {"c0", 2}, {"c1", 2}, {"c2", 2}};
  std::vector<std::pair<std::size_t, std::size_t>> links{
      {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}, {2, 4}, {3, 4}, {2, 5}, {3, 5}, {2, 6}, {3, 6}};
};

/// Random exchanges over SmallNet with arbitrary loss, duplication and
/// reordering: each action either increments a node or delivers some
/// previously sent snapshot along a link. `visit(receiver_before, message,
/// result)` sees every merge.
template <typename A, typename Visit>
std::vector<handoff::HandoffState<A>> random_exchanges(std::uint64_t seed, std::size_t actions, Visit&& visit) {
  Rng rng(seed);
  SmallNet net;
  std::vector<handoff::HandoffState<A>> states;
  for (const auto& [id, tier] : net.nodes) states.push_back(handoff::init<A>(handoff::NodeId(id), tier));
  struct Sent {
    std::size_t to;
    handoff::HandoffState<A> state;
  };
  std::vector<Sent> sent;
  for (std::size_t step = 0; step < actions; ++step) {
    const auto roll = rng() % 10;
    if (roll < 2) {
      const auto k = rng() % states.size();
      states[k] = handoff::add(std::move(states[k]), A::unit(increment_key<A>(rng)));
    } else if (roll < 6 || sent.empty()) {
      const auto& [a, b] = net.links[rng() % net.links.size()];
      const bool forward = rng() % 2;
      const auto from = forward ? a : b;
      const auto to = forward ? b : a;
      sent.push_back({to, states[from]});
      if (sent.size() > 64) sent.erase(sent.begin());
    } else {
      // Recent messages are likelier, old ones still possible.
      const auto span = std::min<std::size_t>(sent.size(), rng() % 2 ? 8 : sent.size());
      const auto& m = sent[sent.size() - 1 - rng() % span];
      auto result = handoff::merge(states[m.to], m.state);
      visit(states[m.to], m.state, result);
      states[m.to] = std::move(result);
    }
  }
  return states;
}

}  // namespace testgen
