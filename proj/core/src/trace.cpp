#include "handoff/trace.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace handoff {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 9> kKinds{{
    {EventKind::Incr, "incr"},
    {EventKind::Fetch, "fetch"},
    {EventKind::Send, "send"},
    {EventKind::Receive, "receive"},
    {EventKind::Drop, "drop"},
    {EventKind::Crash, "crash"},
    {EventKind::Recover, "recover"},
    {EventKind::Flush, "flush"},
    {EventKind::Retire, "retire"},
}};

}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (const auto& [kind, name] : kKinds) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

nlohmann::json to_json(const TraceEvent& e) {
  nlohmann::json j{{"step", e.step}, {"kind", to_string(e.kind)}, {"node", e.node.str()}};
  switch (e.kind) {
    case EventKind::Incr:
      if (!e.key.empty()) j["key"] = e.key;
      break;
    case EventKind::Fetch:
      // Keyless payloads report a single count under the empty key.
      if (e.value.size() == 1 && e.value.begin()->first.empty()) {
        j["value"] = e.value.begin()->second;
      } else {
        j["value"] = e.value;
      }
      break;
    case EventKind::Send:
      j["peer"] = e.peer.str();
      j["copies"] = e.copies;
      j["bytes"] = e.bytes;
      j["slots"] = e.slots;
      break;
    case EventKind::Receive:
      j["peer"] = e.peer.str();
      j["ref"] = e.ref;
      break;
    case EventKind::Drop:
      j["peer"] = e.peer.str();
      j["ref"] = e.ref;
      j["reason"] = e.reason;
      break;
    default:
      break;
  }
  return j;
}

TraceEvent trace_event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("trace event must be an object");
  TraceEvent e;
  e.step = j.at("step").get<std::uint64_t>();
  const auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::runtime_error("unknown event kind " + j.at("kind").dump());
  e.kind = *kind;
  e.node = NodeId(j.at("node").get<std::string>());
  if (auto it = j.find("peer"); it != j.end()) e.peer = NodeId(it->get<std::string>());
  if (auto it = j.find("ref"); it != j.end()) e.ref = it->get<std::uint64_t>();
  if (auto it = j.find("key"); it != j.end()) e.key = it->get<std::string>();
  if (auto it = j.find("value"); it != j.end()) {
    if (it->is_number_integer()) {
      e.value = Counts{{"", it->get<std::uint64_t>()}};
    } else {
      e.value = it->get<Counts>();
    }
  }
  if (auto it = j.find("copies"); it != j.end()) e.copies = it->get<std::uint32_t>();
  if (auto it = j.find("bytes"); it != j.end()) e.bytes = it->get<std::uint64_t>();
  if (auto it = j.find("slots"); it != j.end()) e.slots = it->get<std::uint64_t>();
  if (auto it = j.find("reason"); it != j.end()) e.reason = it->get<std::string>();
  return e;
}

void write_trace(std::ostream& out, const std::vector<TraceEvent>& trace) {
  for (const auto& e : trace) out << to_json(e).dump() << '\n';
}

std::vector<TraceEvent> read_trace(std::istream& in) {
  std::vector<TraceEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(trace_event_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace handoff
