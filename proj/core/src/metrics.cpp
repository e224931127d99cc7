#include "handoff/metrics.hpp"

#include <array>
#include <sstream>
#include <utility>

namespace handoff {

namespace {

using Field = std::pair<const char*, std::uint64_t Metrics::*>;

constexpr std::array<Field, 20> kFields{{
    {"seed", &Metrics::seed},
    {"steps", &Metrics::steps},
    {"total_increments", &Metrics::total_increments},
    {"convergence_rounds", &Metrics::convergence_rounds},
    {"messages_sent", &Metrics::messages_sent},
    {"messages_delivered", &Metrics::messages_delivered},
    {"messages_dropped", &Metrics::messages_dropped},
    {"messages_duplicated", &Metrics::messages_duplicated},
    {"max_state_entries", &Metrics::max_state_entries},
    {"final_state_entries", &Metrics::final_state_entries},
    {"max_message_bytes", &Metrics::max_message_bytes},
    {"final_state_bytes", &Metrics::final_state_bytes},
    {"max_slots_per_node", &Metrics::max_slots_per_node},
    {"max_message_slots", &Metrics::max_message_slots},
    {"max_downward_message_slots", &Metrics::max_downward_message_slots},
    {"max_tier0_vals_entries", &Metrics::max_tier0_vals_entries},
    {"min_final_tier0_vals_entries", &Metrics::min_final_tier0_vals_entries},
    {"baseline_entries", &Metrics::baseline_entries},
    {"crashes", &Metrics::crashes},
    {"retired", &Metrics::retired},
}};

constexpr std::size_t kFieldCount = kFields.size();

}  // namespace

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < kFieldCount; ++k) j[kFields[k].first] = m.*(kFields[k].second);
  return j;
}

std::string metrics_csv_header() {
  std::ostringstream out;
  for (std::size_t k = 0; k < kFieldCount; ++k) out << (k ? "," : "") << kFields[k].first;
  return out.str();
}

std::string metrics_csv_row(const Metrics& m) {
  std::ostringstream out;
  for (std::size_t k = 0; k < kFieldCount; ++k) out << (k ? "," : "") << m.*(kFields[k].second);
  return out.str();
}

}  // namespace handoff
