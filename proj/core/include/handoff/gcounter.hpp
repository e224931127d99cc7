#pragma once

// Version-vector counter: every node that ever participates owns an entry
// forever. Used as the reference oracle and as the scalability foil.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "handoff/types.hpp"

namespace handoff {

struct GCounterState {
  NodeId id;
  std::map<NodeId, std::uint64_t> entries;

  friend bool operator==(const GCounterState&, const GCounterState&) = default;
};

GCounterState gc_init(NodeId id);
GCounterState gc_incr(GCounterState c);
std::uint64_t gc_fetch(const GCounterState& c);
/// Pointwise maximum over the union of ids; keeps ci's id.
GCounterState gc_merge(GCounterState ci, const GCounterState& cj);

nlohmann::json to_json(const GCounterState& c);
std::string encode(const GCounterState& c);
GCounterState gc_decode(std::string_view bytes);

}  // namespace handoff
