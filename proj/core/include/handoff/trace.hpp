#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "handoff/payload.hpp"
#include "handoff/types.hpp"

namespace handoff {

enum class EventKind { Incr, Fetch, Send, Receive, Drop, Crash, Recover, Flush, Retire };

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

/// One atomic action of a run. Field use by kind:
///   incr     node, key
///   fetch    node, value
///   send     node -> peer, copies, bytes, slots (entries in the sent state)
///   receive  node <- peer, ref (step of the matching send)
///   drop     node -> peer, ref (step of the send), reason
///   crash / recover / flush / retire   node
struct TraceEvent {
  std::uint64_t step = 0;
  EventKind kind = EventKind::Fetch;
  NodeId node;
  NodeId peer;
  std::uint64_t ref = 0;
  std::string key;
  Counts value;
  std::uint32_t copies = 0;
  std::uint64_t bytes = 0;
  std::uint64_t slots = 0;
  std::string reason;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

nlohmann::json to_json(const TraceEvent& e);
TraceEvent trace_event_from_json(const nlohmann::json& j);

void write_trace(std::ostream& out, const std::vector<TraceEvent>& trace);
/// Parses JSON-lines; throws std::runtime_error naming the offending line.
std::vector<TraceEvent> read_trace(std::istream& in);

}  // namespace handoff
