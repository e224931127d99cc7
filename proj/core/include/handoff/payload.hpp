#pragma once

// Payload algebras for handoff counters.
//
// A payload is a commutative monoid (combine, zero) that is also a
// join-semilattice (join, leq) whose least element is the monoid identity and
// where join(x, y) <= combine(x, y). Values move between nodes by zeroing at
// the origin and combining at the destination; reporting aggregates with both
// combine and join.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "handoff/types.hpp"

namespace handoff {

/// Per-key non-negative counts; the common reporting shape for all payloads.
using Counts = std::map<std::string, std::uint64_t>;

template <typename A>
concept PayloadAlgebra = requires(const typename A::Value& x, const typename A::Value& y,
                                  std::string_view key) {
  { A::zero() } -> std::same_as<typename A::Value>;
  { A::bottom() } -> std::same_as<typename A::Value>;
  { A::combine(x, y) } -> std::same_as<typename A::Value>;
  { A::join(x, y) } -> std::same_as<typename A::Value>;
  { A::leq(x, y) } -> std::same_as<bool>;
  { x == y } -> std::convertible_to<bool>;
  // Payload of a single increment on `key` (ignored by keyless payloads).
  { A::unit(key) } -> std::same_as<typename A::Value>;
  { A::counts(x) } -> std::same_as<Counts>;
  { A::name } -> std::convertible_to<std::string_view>;
};

/// Non-negative integers with (+, 0, max, <=).
struct NatAlgebra {
  using Value = std::uint64_t;
  static constexpr std::string_view name = "nat";

  static Value zero() { return 0; }
  static Value bottom() { return 0; }
  static Value combine(Value x, Value y) { return checked_add(x, y); }
  static Value join(Value x, Value y) { return std::max(x, y); }
  static bool leq(Value x, Value y) { return x <= y; }
  static Value unit(std::string_view) { return 1; }
  static Counts counts(Value x) { return Counts{{"", x}}; }
};

/// Maps from counter id to non-negative integer. Keys mapped to zero are
/// never stored, so an absent key reads as zero and structural equality is
/// semantic equality.
struct MapAlgebra {
  using Value = std::map<std::string, std::uint64_t>;
  static constexpr std::string_view name = "map";

  static Value zero() { return {}; }
  static Value bottom() { return {}; }

  static Value combine(const Value& x, const Value& y) {
    Value out = x;
    for (const auto& [k, v] : y) {
      auto [it, inserted] = out.try_emplace(k, v);
      if (!inserted) it->second = checked_add(it->second, v);
    }
    normalize(out);
    return out;
  }

  static Value join(const Value& x, const Value& y) {
    Value out = x;
    for (const auto& [k, v] : y) {
      auto [it, inserted] = out.try_emplace(k, v);
      if (!inserted) it->second = std::max(it->second, v);
    }
    normalize(out);
    return out;
  }

  static bool leq(const Value& x, const Value& y) {
    for (const auto& [k, v] : x) {
      if (v > get(y, k)) return false;
    }
    return true;
  }

  static Value unit(std::string_view key) { return Value{{std::string(key), 1}}; }
  static Counts counts(const Value& x) { return x; }

  static std::uint64_t get(const Value& x, std::string_view key) {
    auto it = x.find(std::string(key));
    return it == x.end() ? 0 : it->second;
  }

  static void normalize(Value& x) { std::erase_if(x, [](const auto& kv) { return kv.second == 0; }); }
};

/// Map-of-counters restricted to the keys "p" (increments) and "n"
/// (decrements).
struct PNAlgebra : MapAlgebra {
  static constexpr std::string_view name = "pn";
  static constexpr std::string_view kPositive = "p";
  static constexpr std::string_view kNegative = "n";

  static Value unit(std::string_view key) {
    if (key != kPositive && key != kNegative) {
      throw std::invalid_argument("pn payload key must be \"p\" or \"n\", got \"" +
                                  std::string(key) + "\"");
    }
    return MapAlgebra::unit(key);
  }

  static bool valid(const Value& x) {
    return std::all_of(x.begin(), x.end(),
                       [](const auto& kv) { return kv.first == kPositive || kv.first == kNegative; });
  }
};

/// Increments minus decrements; absent keys read as zero.
inline std::int64_t pn_fetch(const MapAlgebra::Value& x) {
  const auto p = MapAlgebra::get(x, PNAlgebra::kPositive);
  const auto n = MapAlgebra::get(x, PNAlgebra::kNegative);
  constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  if (p > kMax || n > kMax) throw std::overflow_error("pn counter component exceeds int64 range");
  return static_cast<std::int64_t>(p) - static_cast<std::int64_t>(n);
}

/// Folds combine over a range of payloads.
template <PayloadAlgebra A, typename Range>
typename A::Value combine_all(const Range& values) {
  auto acc = A::zero();
  for (const auto& v : values) acc = A::combine(acc, v);
  return acc;
}

}  // namespace handoff
