#pragma once

// Canonical JSON encoding of handoff counter states.
//
//   {"below":0,"dck":1,"id":"B","sck":0,"slots":{"A":[0,0]},"tier":0,
//    "tokens":{"A|B":{"ck":[0,0],"n":9}},"val":0,"vals":{"B":0}}
//
// Object keys are emitted in lexicographic order so structurally equal
// states encode to identical bytes.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "handoff/counter.hpp"

namespace handoff {

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-negative integer, whether the parser stored it as signed or unsigned.
inline bool is_count(const nlohmann::json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

template <typename A>
struct PayloadCodec;

template <>
struct PayloadCodec<NatAlgebra> {
  static nlohmann::json to_json(NatAlgebra::Value v) { return v; }
  static NatAlgebra::Value from_json(const nlohmann::json& j, std::string_view where) {
    if (!is_count(j)) throw DecodeError(std::string(where) + ": expected non-negative integer");
    return j.get<std::uint64_t>();
  }
};

template <>
struct PayloadCodec<MapAlgebra> {
  static nlohmann::json to_json(const MapAlgebra::Value& v) {
    auto out = nlohmann::json::object();
    for (const auto& [k, n] : v) out[k] = n;
    return out;
  }
  static MapAlgebra::Value from_json(const nlohmann::json& j, std::string_view where) {
    if (!j.is_object()) throw DecodeError(std::string(where) + ": expected object of counts");
    MapAlgebra::Value out;
    for (const auto& [k, n] : j.items()) {
      if (!is_count(n)) {
        throw DecodeError(std::string(where) + "." + k + ": expected non-negative integer");
      }
      if (auto v = n.get<std::uint64_t>(); v != 0) out.emplace(k, v);
    }
    return out;
  }
};

template <>
struct PayloadCodec<PNAlgebra> {
  static nlohmann::json to_json(const PNAlgebra::Value& v) { return PayloadCodec<MapAlgebra>::to_json(v); }
  static PNAlgebra::Value from_json(const nlohmann::json& j, std::string_view where) {
    auto v = PayloadCodec<MapAlgebra>::from_json(j, where);
    if (!PNAlgebra::valid(v)) throw DecodeError(std::string(where) + ": pn payload keys must be p or n");
    return v;
  }
};

namespace detail {

inline std::string token_key_string(const TokenKey& k) { return k.src.str() + "|" + k.dst.str(); }

inline void require_id(const NodeId& id, std::string_view where) {
  if (!is_valid_node_id(id.str())) {
    throw std::invalid_argument(std::string(where) + ": node id \"" + id.str() + "\" is empty or contains '|'");
  }
}

inline const nlohmann::json& field(const nlohmann::json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw DecodeError(std::string("missing field \"") + name + "\"");
  return *it;
}

inline std::uint64_t unsigned_field(const nlohmann::json& obj, const char* name) {
  const auto& v = field(obj, name);
  if (!is_count(v)) throw DecodeError(std::string("field \"") + name + "\" must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline NodeId parse_id(const std::string& text, std::string_view where) {
  if (!is_valid_node_id(text)) throw DecodeError(std::string(where) + ": invalid node id \"" + text + "\"");
  return NodeId(text);
}

inline ClockPair parse_clocks(const nlohmann::json& j, std::string_view where) {
  if (!j.is_array() || j.size() != 2 || !is_count(j[0]) || !is_count(j[1])) {
    throw DecodeError(std::string(where) + ": expected [sck, dck]");
  }
  return ClockPair{j[0].get<Clock>(), j[1].get<Clock>()};
}

}  // namespace detail

template <PayloadAlgebra A>
nlohmann::json to_json(const HandoffState<A>& c) {
  using Codec = PayloadCodec<A>;
  detail::require_id(c.id, "encode");
  nlohmann::json vals = nlohmann::json::object();
  for (const auto& [k, v] : c.vals) {
    detail::require_id(k, "encode vals");
    vals[k.str()] = Codec::to_json(v);
  }
  nlohmann::json slots = nlohmann::json::object();
  for (const auto& [k, ck] : c.slots) {
    detail::require_id(k, "encode slots");
    slots[k.str()] = nlohmann::json::array({ck.sck, ck.dck});
  }
  nlohmann::json tokens = nlohmann::json::object();
  for (const auto& [k, t] : c.tokens) {
    detail::require_id(k.src, "encode tokens");
    detail::require_id(k.dst, "encode tokens");
    tokens[detail::token_key_string(k)] = {{"ck", nlohmann::json::array({t.ck.sck, t.ck.dck})},
                                           {"n", Codec::to_json(t.n)}};
  }
  return {{"id", c.id.str()}, {"tier", c.tier},    {"val", Codec::to_json(c.val)},
          {"below", Codec::to_json(c.below)}, {"vals", std::move(vals)}, {"sck", c.sck},
          {"dck", c.dck},     {"slots", std::move(slots)}, {"tokens", std::move(tokens)}};
}

template <PayloadAlgebra A>
std::string encode(const HandoffState<A>& c) {
  return to_json(c).dump();
}

/// Decodes and validates a state. Throws DecodeError on malformed input or
/// when the decoded state breaks a structural invariant.
template <PayloadAlgebra A>
HandoffState<A> from_json(const nlohmann::json& j) {
  using Codec = PayloadCodec<A>;
  if (!j.is_object()) throw DecodeError("state must be a JSON object");
  HandoffState<A> c;
  const auto& id = detail::field(j, "id");
  if (!id.is_string()) throw DecodeError("field \"id\" must be a string");
  c.id = detail::parse_id(id.get<std::string>(), "id");
  const auto tier = detail::unsigned_field(j, "tier");
  if (tier > std::numeric_limits<Tier>::max()) throw DecodeError("field \"tier\" out of range");
  c.tier = static_cast<Tier>(tier);
  c.val = Codec::from_json(detail::field(j, "val"), "val");
  c.below = Codec::from_json(detail::field(j, "below"), "below");
  c.sck = detail::unsigned_field(j, "sck");
  c.dck = detail::unsigned_field(j, "dck");

  const auto& vals = detail::field(j, "vals");
  if (!vals.is_object()) throw DecodeError("field \"vals\" must be an object");
  for (const auto& [k, v] : vals.items()) {
    c.vals.emplace(detail::parse_id(k, "vals"), Codec::from_json(v, "vals." + k));
  }

  const auto& slots = detail::field(j, "slots");
  if (!slots.is_object()) throw DecodeError("field \"slots\" must be an object");
  for (const auto& [k, v] : slots.items()) {
    c.slots.emplace(detail::parse_id(k, "slots"), detail::parse_clocks(v, "slots." + k));
  }

  const auto& tokens = detail::field(j, "tokens");
  if (!tokens.is_object()) throw DecodeError("field \"tokens\" must be an object");
  for (const auto& [k, v] : tokens.items()) {
    const auto bar = k.find('|');
    if (bar == std::string::npos) throw DecodeError("token key \"" + k + "\" is not of the form src|dst");
    TokenKey key{detail::parse_id(k.substr(0, bar), "tokens"), detail::parse_id(k.substr(bar + 1), "tokens")};
    if (!v.is_object()) throw DecodeError("token \"" + k + "\" must be an object");
    c.tokens.emplace(std::move(key), Token<typename A::Value>{detail::parse_clocks(detail::field(v, "ck"), "tokens." + k),
                                                               Codec::from_json(detail::field(v, "n"), "tokens." + k)});
  }

  if (auto problem = shape_violation(c); !problem.empty()) throw DecodeError("invalid state: " + problem);
  return c;
}

template <PayloadAlgebra A>
HandoffState<A> decode(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(std::string("malformed JSON: ") + e.what());
  }
  return from_json<A>(j);
}

}  // namespace handoff
