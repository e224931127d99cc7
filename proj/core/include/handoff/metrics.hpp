#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

namespace handoff {

/// Per-run measurements.
///
/// Every message copy that enters the channel is eventually delivered,
/// dropped, or still in flight when the run ends, so
/// delivered + dropped <= sent + duplicated.
struct Metrics {
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t total_increments = 0;
  std::uint64_t convergence_rounds = 0;

  std::uint64_t messages_sent = 0;
  std::uint64_t messages_delivered = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t messages_duplicated = 0;

  // Map entries (vals + slots + tokens) per node.
  std::uint64_t max_state_entries = 0;
  std::uint64_t final_state_entries = 0;
  // Encoded bytes: largest message sent, largest final node state.
  std::uint64_t max_message_bytes = 0;
  std::uint64_t final_state_bytes = 0;

  std::uint64_t max_slots_per_node = 0;
  std::uint64_t max_message_slots = 0;
  /// Largest slots map carried by a message from a smaller to a higher tier.
  std::uint64_t max_downward_message_slots = 0;

  std::uint64_t max_tier0_vals_entries = 0;
  std::uint64_t min_final_tier0_vals_entries = 0;
  std::uint64_t baseline_entries = 0;

  std::uint64_t crashes = 0;
  std::uint64_t retired = 0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

nlohmann::json to_json(const Metrics& m);
std::string metrics_csv_header();
std::string metrics_csv_row(const Metrics& m);

}  // namespace handoff
