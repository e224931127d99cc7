#include <gtest/gtest.h>

#include "handoff/scenario.hpp"

namespace {

using namespace handoff;
using nlohmann::json;

const std::string kDir = HANDOFF_SCENARIO_DIR;

json minimal() {
  return json::parse(R"({
    "version": 1,
    "topology": {"nodes": [{"id": "A", "tier": 1}, {"id": "B", "tier": 0}], "links": [["A", "B"]]}
  })");
}

TEST(Scenario, MinimalDefaults) {
  const auto cfg = parse_scenario(minimal());
  EXPECT_EQ(cfg.payload, PayloadKind::Nat);
  EXPECT_EQ(cfg.gossip, GossipPolicy::ChosenServer);
  EXPECT_TRUE(cfg.use_view);
  EXPECT_EQ(cfg.flush_interval, 0u);
  EXPECT_EQ(cfg.topology.nodes.size(), 2u);
  EXPECT_TRUE(validate_scenario(cfg).empty());
}

TEST(Scenario, ShippedScenariosLoad) {
  for (const char* name : {"two_node_handoff", "datacenters", "busy_server", "crash_flush", "pn_counter", "map_counter"}) {
    const auto cfg = load_scenario(kDir + "/" + name + ".json");
    EXPECT_TRUE(validate_scenario(cfg).empty()) << name;
  }
  const auto bad = load_scenario(kDir + "/tier0_disconnected.json");
  EXPECT_FALSE(validate_scenario(bad).empty());
}

TEST(Scenario, GeneratedTopology) {
  const auto cfg = load_scenario(kDir + "/datacenters.json");
  EXPECT_EQ(cfg.topology.nodes.size(), 46u);
  EXPECT_EQ(cfg.channel.loss, 0.3);
  EXPECT_EQ(cfg.channel.delay_max, 50u);
  ASSERT_TRUE(cfg.random_increments.has_value());
  EXPECT_EQ(cfg.random_increments->total, 1000u);
}

TEST(Scenario, StructuralErrorsThrow) {
  EXPECT_THROW(parse_scenario(json::array()), ConfigError);
  auto j = minimal();
  j["version"] = 2;
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = minimal();
  j["bogus"] = 1;
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = minimal();
  j["gossip"] = "flood";
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = minimal();
  j["steps"] = -4;
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = minimal();
  j.erase("topology");
  EXPECT_THROW(parse_scenario(j), ConfigError);
  EXPECT_THROW(load_scenario(kDir + "/does_not_exist.json"), ConfigError);
}

TEST(Scenario, SemanticProblemsAreListed) {
  auto j = minimal();
  j["channel"] = {{"loss", 1.5}};
  j["increments"] = json::array({{{"node", "Q"}, {"step", 0}}});
  j["crashes"] = json::array({{{"node", "A"}, {"at", 5}, {"recover", 3}}});
  const auto problems = validate_scenario(parse_scenario(j));
  EXPECT_EQ(problems.size(), 3u);
}

TEST(Scenario, PayloadKeyChecks) {
  auto j = minimal();
  j["payload"] = "pn";
  j["increments"] = json::array({{{"node", "A"}, {"key", "x"}}});
  EXPECT_FALSE(validate_scenario(parse_scenario(j)).empty());
  j["increments"] = json::array({{{"node", "A"}, {"key", "n"}}});
  EXPECT_TRUE(validate_scenario(parse_scenario(j)).empty());
  j["payload"] = "map";
  j["increments"] = json::array({{{"node", "A"}}});
  EXPECT_FALSE(validate_scenario(parse_scenario(j)).empty());
}

TEST(Scenario, LinkChannelsAndPartitions) {
  auto j = minimal();
  j["channel"] = {{"loss", 0.1}};
  j["link_channels"] = json::array({{{"a", "B"}, {"b", "A"}, {"dup", 0.5}}});
  j["partitions"] = json::array({{{"a", "A"}, {"b", "B"}, {"from", 10}, {"to", 20}}});
  const auto cfg = parse_scenario(j);
  const Link ab(NodeId("A"), NodeId("B"));
  EXPECT_EQ(cfg.channel_for(ab).loss, 0.1);
  EXPECT_EQ(cfg.channel_for(ab).dup, 0.5);
  EXPECT_FALSE(cfg.partitioned(ab, 9));
  EXPECT_TRUE(cfg.partitioned(ab, 10));
  EXPECT_FALSE(cfg.partitioned(ab, 20));
}

TEST(Scenario, JsonRoundTrip) {
  const auto cfg = load_scenario(kDir + "/crash_flush.json");
  const auto again = parse_scenario(to_json(cfg));
  EXPECT_EQ(to_json(again), to_json(cfg));
  EXPECT_EQ(again.crashes.size(), 4u);
  EXPECT_EQ(again.flush_interval, 10u);
}

TEST(Scenario, Tags) {
  auto j = minimal();
  j["tags"] = json::array({kTagAllowResidue});
  EXPECT_TRUE(parse_scenario(j).has_tag(kTagAllowResidue));
}

}  // namespace
