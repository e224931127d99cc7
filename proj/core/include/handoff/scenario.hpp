#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "handoff/topology.hpp"

namespace handoff {

/// Raised for unreadable or schema-invalid configs (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigVersion = 1;

struct ChannelModel {
  double loss = 0.0;
  double dup = 0.0;
  std::uint64_t delay_min = 0;
  std::uint64_t delay_max = 0;

  friend bool operator==(const ChannelModel&, const ChannelModel&) = default;
};

struct LinkChannel {
  Link link;
  ChannelModel model;
};

/// A link that loses every message during [from, to); `to` absent means
/// until the end of the main run.
struct Partition {
  Link link;
  std::uint64_t from = 0;
  std::optional<std::uint64_t> to;
};

enum class PayloadKind { Nat, Map, PN };
enum class GossipPolicy { AllNeighbors, RandomNeighbor, ChosenServer };

std::string_view to_string(PayloadKind k);
std::string_view to_string(GossipPolicy p);

struct ScheduledIncrement {
  NodeId node;
  std::uint64_t step = 0;
  std::uint64_t count = 1;
  std::string key;
};

/// Increments spread uniformly at random over nodes and steps.
struct RandomIncrements {
  std::uint64_t total = 0;
  /// "max-tier", "all", or "tier:<n>"; ignored when `node_list` is non-empty.
  std::string nodes = "max-tier";
  std::vector<NodeId> node_list;
  std::uint64_t until = 0;
  std::vector<std::string> keys;
};

struct CrashEvent {
  NodeId node;
  std::uint64_t at = 0;
  std::optional<std::uint64_t> recover;
};

struct Retirement {
  NodeId node;
  std::uint64_t at = 0;
};

inline constexpr const char* kTagAllowResidue = "allow-residue";

struct ScenarioConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  PayloadKind payload = PayloadKind::Nat;
  Topology topology;
  ChannelModel channel;
  std::vector<LinkChannel> link_channels;
  std::vector<Partition> partitions;
  std::uint64_t steps = 10000;
  std::vector<ScheduledIncrement> increments;
  std::optional<RandomIncrements> random_increments;
  double fetch_prob = 1.0;
  GossipPolicy gossip = GossipPolicy::ChosenServer;
  /// Sends to the chosen server without hearing back before switching.
  std::uint32_t suspect_after = 5;
  bool use_view = true;
  /// Minimum steps between durable writes of merged state; 0 = write-through.
  std::uint64_t flush_interval = 0;
  std::vector<CrashEvent> crashes;
  std::vector<Retirement> retirements;
  /// Let retiring nodes leave once all own tokens are seen cached elsewhere.
  bool cached_retirement = true;
  /// Quiescence round limit; 0 selects 4 x node count.
  std::uint64_t quiescence_round_limit = 0;
  std::set<std::string> tags;

  const ChannelModel& channel_for(const Link& l) const;
  bool partitioned(const Link& l, std::uint64_t step) const;
  bool has_tag(std::string_view t) const { return tags.contains(std::string(t)); }
};

/// Parses the JSON schema. Throws ConfigError on structural problems.
ScenarioConfig parse_scenario(const nlohmann::json& j);
/// Reads and parses a config file. Throws ConfigError.
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioConfig& cfg);

/// Semantic checks: topology assumptions, referenced nodes exist, ranges.
/// One human-readable line per problem; empty when valid.
std::vector<std::string> validate_scenario(const ScenarioConfig& cfg);

}  // namespace handoff
