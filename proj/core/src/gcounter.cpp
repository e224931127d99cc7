#include "handoff/gcounter.hpp"

#include <algorithm>

#include "handoff/codec.hpp"

namespace handoff {

GCounterState gc_init(NodeId id) {
  GCounterState c;
  c.entries.emplace(id, 0);
  c.id = std::move(id);
  return c;
}

GCounterState gc_incr(GCounterState c) {
  auto& own = c.entries[c.id];
  own = checked_add(own, 1);
  return c;
}

std::uint64_t gc_fetch(const GCounterState& c) {
  std::uint64_t total = 0;
  for (const auto& [_, n] : c.entries) total = checked_add(total, n);
  return total;
}

GCounterState gc_merge(GCounterState ci, const GCounterState& cj) {
  for (const auto& [k, n] : cj.entries) {
    auto [it, inserted] = ci.entries.try_emplace(k, n);
    if (!inserted) it->second = std::max(it->second, n);
  }
  return ci;
}

nlohmann::json to_json(const GCounterState& c) {
  detail::require_id(c.id, "encode");
  auto entries = nlohmann::json::object();
  for (const auto& [k, n] : c.entries) {
    detail::require_id(k, "encode entries");
    entries[k.str()] = n;
  }
  return {{"id", c.id.str()}, {"entries", std::move(entries)}};
}

std::string encode(const GCounterState& c) { return to_json(c).dump(); }

GCounterState gc_decode(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw DecodeError("state must be a JSON object");
  const auto& id = detail::field(j, "id");
  if (!id.is_string()) throw DecodeError("field \"id\" must be a string");
  GCounterState c;
  c.id = detail::parse_id(id.get<std::string>(), "id");
  const auto& entries = detail::field(j, "entries");
  if (!entries.is_object()) throw DecodeError("field \"entries\" must be an object");
  for (const auto& [k, n] : entries.items()) {
    if (!is_count(n)) throw DecodeError("entries." + k + ": expected non-negative integer");
    c.entries.emplace(detail::parse_id(k, "entries"), n.get<std::uint64_t>());
  }
  if (!c.entries.contains(c.id)) throw DecodeError("invalid state: entries lacks self entry");
  return c;
}

}  // namespace handoff
