#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace handoff {

using Tier = std::uint32_t;
using Clock = std::uint64_t;

/// Globally unique, totally ordered node identifier.
///
/// Ids are carried as text so traces and encoded states stay readable. The
/// character '|' is reserved by the token-key encoding and is rejected.
class NodeId {
 public:
  NodeId() = default;
  explicit NodeId(std::string value) : value_(std::move(value)) {}
  explicit NodeId(const char* value) : value_(value) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  friend bool operator==(const NodeId&, const NodeId&) = default;

  friend std::ostream& operator<<(std::ostream& os, const NodeId& id) {
    return os << id.value_;
  }

 private:
  std::string value_;
};

/// True when `id` can be used in topologies and encoded states.
inline bool is_valid_node_id(std::string_view id) {
  return !id.empty() && id.find('|') == std::string_view::npos;
}

/// Source/destination logical clock pair stored in slots and tokens.
struct ClockPair {
  Clock sck = 0;
  Clock dck = 0;

  friend auto operator<=>(const ClockPair&, const ClockPair&) = default;
  friend bool operator==(const ClockPair&, const ClockPair&) = default;
};

/// Key of the tokens map: (source, destination).
struct TokenKey {
  NodeId src;
  NodeId dst;

  friend auto operator<=>(const TokenKey&, const TokenKey&) = default;
  friend bool operator==(const TokenKey&, const TokenKey&) = default;
};

/// Full identity of a slot or token: (src, dst, sck, dck).
struct HandoffId {
  NodeId src;
  NodeId dst;
  ClockPair ck;

  friend auto operator<=>(const HandoffId&, const HandoffId&) = default;
  friend bool operator==(const HandoffId&, const HandoffId&) = default;
};

inline std::string to_string(const HandoffId& id) {
  return "(" + id.src.str() + "," + id.dst.str() + "," + std::to_string(id.ck.sck) + "," +
         std::to_string(id.ck.dck) + ")";
}

/// Addition that throws instead of wrapping.
inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw std::overflow_error("64-bit counter overflow");
  }
  return out;
}

inline Clock checked_increment(Clock c) { return checked_add(c, 1); }

}  // namespace handoff

template <>
struct std::hash<handoff::NodeId> {
  std::size_t operator()(const handoff::NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
