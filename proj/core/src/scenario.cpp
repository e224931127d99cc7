#include "handoff/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "handoff/codec.hpp"

namespace handoff {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) fail(where, "unknown field \"" + k + "\"");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::uint64_t get_u64(const json& obj, const char* key, const std::string& where, std::uint64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!is_count(*v)) fail(where + "." + key, "expected non-negative integer");
  return v->get<std::uint64_t>();
}

std::optional<std::uint64_t> get_opt_u64(const json& obj, const char* key, const std::string& where) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  if (!is_count(*v)) fail(where + "." + key, "expected non-negative integer");
  return v->get<std::uint64_t>();
}

double get_double(const json& obj, const char* key, const std::string& where, double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(where + "." + key, "expected number");
  return v->get<double>();
}

bool get_bool(const json& obj, const char* key, const std::string& where, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(where + "." + key, "expected boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json* v = find(obj, key);
  if (!v || !v->is_string()) fail(where + "." + key, "expected string");
  return v->get<std::string>();
}

NodeId get_node(const json& obj, const char* key, const std::string& where) {
  return NodeId(get_string(obj, key, where));
}

const json& require_object(const json& v, const std::string& where) {
  if (!v.is_object()) fail(where, "expected object");
  return v;
}

Link parse_link_ends(const json& obj, const std::string& where) {
  return Link(get_node(obj, "a", where), get_node(obj, "b", where));
}

ChannelModel parse_channel(const json& obj, const std::string& where, const ChannelModel& base) {
  ChannelModel m = base;
  m.loss = get_double(obj, "loss", where, base.loss);
  m.dup = get_double(obj, "dup", where, base.dup);
  m.delay_min = get_u64(obj, "delay_min", where, base.delay_min);
  m.delay_max = get_u64(obj, "delay_max", where, base.delay_max);
  return m;
}

Topology parse_topology(const json& obj) {
  const std::string where = "topology";
  require_object(obj, where);
  if (obj.contains("datacenters")) {
    reject_unknown(obj, where, {"datacenters", "tier0_per_dc", "tier1_per_dc", "clients_per_tier1", "client_fanout"});
    DatacenterLayout layout;
    layout.datacenters = get_u64(obj, "datacenters", where, 1);
    layout.tier0_per_dc = get_u64(obj, "tier0_per_dc", where, 1);
    layout.tier1_per_dc = get_u64(obj, "tier1_per_dc", where, 1);
    layout.clients_per_tier1 = get_u64(obj, "clients_per_tier1", where, 0);
    layout.client_fanout = get_u64(obj, "client_fanout", where, 1);
    try {
      return generate_datacenter_topology(layout);
    } catch (const std::invalid_argument& e) {
      fail(where, e.what());
    }
  }
  reject_unknown(obj, where, {"nodes", "links"});
  Topology t;
  const json* nodes = find(obj, "nodes");
  if (!nodes || !nodes->is_array()) fail(where + ".nodes", "expected array");
  for (std::size_t k = 0; k < nodes->size(); ++k) {
    const auto w = where + ".nodes[" + std::to_string(k) + "]";
    const auto& n = require_object((*nodes)[k], w);
    reject_unknown(n, w, {"id", "tier"});
    const auto tier = get_u64(n, "tier", w, 0);
    if (tier > std::numeric_limits<Tier>::max()) fail(w + ".tier", "out of range");
    t.nodes.push_back({get_node(n, "id", w), static_cast<Tier>(tier)});
  }
  if (const json* links = find(obj, "links")) {
    if (!links->is_array()) fail(where + ".links", "expected array");
    for (std::size_t k = 0; k < links->size(); ++k) {
      const auto& l = (*links)[k];
      const auto w = where + ".links[" + std::to_string(k) + "]";
      if (!l.is_array() || l.size() != 2 || !l[0].is_string() || !l[1].is_string()) fail(w, "expected [id, id]");
      t.links.emplace(NodeId(l[0].get<std::string>()), NodeId(l[1].get<std::string>()));
    }
  }
  return t;
}

PayloadKind parse_payload(const std::string& s) {
  if (s == "nat") return PayloadKind::Nat;
  if (s == "map") return PayloadKind::Map;
  if (s == "pn") return PayloadKind::PN;
  fail("payload", "expected \"nat\", \"map\" or \"pn\", got \"" + s + "\"");
}

GossipPolicy parse_gossip(const std::string& s) {
  if (s == "all-neighbors") return GossipPolicy::AllNeighbors;
  if (s == "random-neighbor") return GossipPolicy::RandomNeighbor;
  if (s == "chosen-server") return GossipPolicy::ChosenServer;
  fail("gossip", "expected \"all-neighbors\", \"random-neighbor\" or \"chosen-server\", got \"" + s + "\"");
}

}  // namespace

std::string_view to_string(PayloadKind k) {
  switch (k) {
    case PayloadKind::Nat: return "nat";
    case PayloadKind::Map: return "map";
    case PayloadKind::PN: return "pn";
  }
  return "?";
}

std::string_view to_string(GossipPolicy p) {
  switch (p) {
    case GossipPolicy::AllNeighbors: return "all-neighbors";
    case GossipPolicy::RandomNeighbor: return "random-neighbor";
    case GossipPolicy::ChosenServer: return "chosen-server";
  }
  return "?";
}

const ChannelModel& ScenarioConfig::channel_for(const Link& l) const {
  for (const auto& lc : link_channels) {
    if (lc.link == l) return lc.model;
  }
  return channel;
}

bool ScenarioConfig::partitioned(const Link& l, std::uint64_t step) const {
  return std::any_of(partitions.begin(), partitions.end(), [&](const Partition& p) {
    return p.link == l && step >= p.from && (!p.to || step < *p.to);
  });
}

ScenarioConfig parse_scenario(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, "config",
                 {"version", "seed", "payload", "topology", "channel", "link_channels", "partitions", "steps",
                  "increments", "fetch_prob", "gossip", "suspect_after", "use_view", "flush_interval", "crashes",
                  "retirements", "cached_retirement", "quiescence_round_limit", "tags", "description"});
  ScenarioConfig cfg;
  const json* version = find(j, "version");
  if (!version || !version->is_number_integer()) fail("version", "required integer field");
  cfg.version = version->get<int>();
  if (cfg.version != kConfigVersion) fail("version", "unsupported version " + std::to_string(cfg.version));

  cfg.seed = get_u64(j, "seed", "config", 0);
  if (const json* p = find(j, "payload")) {
    if (!p->is_string()) fail("payload", "expected string");
    cfg.payload = parse_payload(p->get<std::string>());
  }
  const json* topo = find(j, "topology");
  if (!topo) fail("topology", "required");
  cfg.topology = parse_topology(*topo);

  if (const json* ch = find(j, "channel")) {
    require_object(*ch, "channel");
    reject_unknown(*ch, "channel", {"loss", "dup", "delay_min", "delay_max"});
    cfg.channel = parse_channel(*ch, "channel", ChannelModel{});
  }
  if (const json* lcs = find(j, "link_channels")) {
    if (!lcs->is_array()) fail("link_channels", "expected array");
    for (std::size_t k = 0; k < lcs->size(); ++k) {
      const auto w = "link_channels[" + std::to_string(k) + "]";
      const auto& o = require_object((*lcs)[k], w);
      reject_unknown(o, w, {"a", "b", "loss", "dup", "delay_min", "delay_max"});
      cfg.link_channels.push_back({parse_link_ends(o, w), parse_channel(o, w, cfg.channel)});
    }
  }
  if (const json* ps = find(j, "partitions")) {
    if (!ps->is_array()) fail("partitions", "expected array");
    for (std::size_t k = 0; k < ps->size(); ++k) {
      const auto w = "partitions[" + std::to_string(k) + "]";
      const auto& o = require_object((*ps)[k], w);
      reject_unknown(o, w, {"a", "b", "from", "to"});
      cfg.partitions.push_back({parse_link_ends(o, w), get_u64(o, "from", w, 0), get_opt_u64(o, "to", w)});
    }
  }
  cfg.steps = get_u64(j, "steps", "config", cfg.steps);

  if (const json* inc = find(j, "increments")) {
    if (inc->is_array()) {
      for (std::size_t k = 0; k < inc->size(); ++k) {
        const auto w = "increments[" + std::to_string(k) + "]";
        const auto& o = require_object((*inc)[k], w);
        reject_unknown(o, w, {"node", "step", "count", "key"});
        ScheduledIncrement s;
        s.node = get_node(o, "node", w);
        s.step = get_u64(o, "step", w, 0);
        s.count = get_u64(o, "count", w, 1);
        if (find(o, "key")) s.key = get_string(o, "key", w);
        cfg.increments.push_back(std::move(s));
      }
    } else if (inc->is_object()) {
      const std::string w = "increments";
      reject_unknown(*inc, w, {"total", "nodes", "until", "keys"});
      RandomIncrements r;
      r.total = get_u64(*inc, "total", w, 0);
      r.until = get_u64(*inc, "until", w, 0);
      if (const json* nodes = find(*inc, "nodes")) {
        if (nodes->is_string()) {
          r.nodes = nodes->get<std::string>();
        } else if (nodes->is_array()) {
          for (const auto& n : *nodes) {
            if (!n.is_string()) fail(w + ".nodes", "expected array of ids");
            r.node_list.emplace_back(n.get<std::string>());
          }
        } else {
          fail(w + ".nodes", "expected string or array");
        }
      }
      if (const json* keys = find(*inc, "keys")) {
        if (!keys->is_array()) fail(w + ".keys", "expected array of strings");
        for (const auto& k : *keys) {
          if (!k.is_string()) fail(w + ".keys", "expected array of strings");
          r.keys.push_back(k.get<std::string>());
        }
      }
      cfg.random_increments = std::move(r);
    } else {
      fail("increments", "expected array or object");
    }
  }

  cfg.fetch_prob = get_double(j, "fetch_prob", "config", cfg.fetch_prob);
  if (const json* g = find(j, "gossip")) {
    if (!g->is_string()) fail("gossip", "expected string");
    cfg.gossip = parse_gossip(g->get<std::string>());
  }
  const auto suspect = get_u64(j, "suspect_after", "config", cfg.suspect_after);
  if (suspect == 0 || suspect > std::numeric_limits<std::uint32_t>::max()) fail("suspect_after", "out of range");
  cfg.suspect_after = static_cast<std::uint32_t>(suspect);
  cfg.use_view = get_bool(j, "use_view", "config", cfg.use_view);
  cfg.flush_interval = get_u64(j, "flush_interval", "config", cfg.flush_interval);
  cfg.cached_retirement = get_bool(j, "cached_retirement", "config", cfg.cached_retirement);
  cfg.quiescence_round_limit = get_u64(j, "quiescence_round_limit", "config", 0);

  if (const json* cs = find(j, "crashes")) {
    if (!cs->is_array()) fail("crashes", "expected array");
    for (std::size_t k = 0; k < cs->size(); ++k) {
      const auto w = "crashes[" + std::to_string(k) + "]";
      const auto& o = require_object((*cs)[k], w);
      reject_unknown(o, w, {"node", "at", "recover"});
      cfg.crashes.push_back({get_node(o, "node", w), get_u64(o, "at", w, 0), get_opt_u64(o, "recover", w)});
    }
  }
  if (const json* rs = find(j, "retirements")) {
    if (!rs->is_array()) fail("retirements", "expected array");
    for (std::size_t k = 0; k < rs->size(); ++k) {
      const auto w = "retirements[" + std::to_string(k) + "]";
      const auto& o = require_object((*rs)[k], w);
      reject_unknown(o, w, {"node", "at"});
      cfg.retirements.push_back({get_node(o, "node", w), get_u64(o, "at", w, 0)});
    }
  }
  if (const json* tags = find(j, "tags")) {
    if (!tags->is_array()) fail("tags", "expected array of strings");
    for (const auto& t : *tags) {
      if (!t.is_string()) fail("tags", "expected array of strings");
      cfg.tags.insert(t.get<std::string>());
    }
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": malformed JSON: " + e.what());
  }
  return parse_scenario(j);
}

json to_json(const ScenarioConfig& cfg) {
  auto channel = [](const ChannelModel& m) {
    return json{{"loss", m.loss}, {"dup", m.dup}, {"delay_min", m.delay_min}, {"delay_max", m.delay_max}};
  };
  json j{{"version", cfg.version},
         {"seed", cfg.seed},
         {"payload", to_string(cfg.payload)},
         {"topology", to_json(cfg.topology)},
         {"channel", channel(cfg.channel)},
         {"steps", cfg.steps},
         {"fetch_prob", cfg.fetch_prob},
         {"gossip", to_string(cfg.gossip)},
         {"suspect_after", cfg.suspect_after},
         {"use_view", cfg.use_view},
         {"flush_interval", cfg.flush_interval},
         {"cached_retirement", cfg.cached_retirement},
         {"quiescence_round_limit", cfg.quiescence_round_limit}};
  auto lcs = json::array();
  for (const auto& lc : cfg.link_channels) {
    auto o = channel(lc.model);
    o["a"] = lc.link.a.str();
    o["b"] = lc.link.b.str();
    lcs.push_back(std::move(o));
  }
  j["link_channels"] = std::move(lcs);
  auto ps = json::array();
  for (const auto& p : cfg.partitions) {
    json o{{"a", p.link.a.str()}, {"b", p.link.b.str()}, {"from", p.from}};
    if (p.to) o["to"] = *p.to;
    ps.push_back(std::move(o));
  }
  j["partitions"] = std::move(ps);
  if (cfg.random_increments) {
    const auto& r = *cfg.random_increments;
    json o{{"total", r.total}, {"until", r.until}};
    if (r.node_list.empty()) {
      o["nodes"] = r.nodes;
    } else {
      auto ids = json::array();
      for (const auto& n : r.node_list) ids.push_back(n.str());
      o["nodes"] = std::move(ids);
    }
    if (!r.keys.empty()) o["keys"] = r.keys;
    j["increments"] = std::move(o);
  } else {
    auto inc = json::array();
    for (const auto& s : cfg.increments) {
      json o{{"node", s.node.str()}, {"step", s.step}, {"count", s.count}};
      if (!s.key.empty()) o["key"] = s.key;
      inc.push_back(std::move(o));
    }
    j["increments"] = std::move(inc);
  }
  auto cs = json::array();
  for (const auto& c : cfg.crashes) {
    json o{{"node", c.node.str()}, {"at", c.at}};
    if (c.recover) o["recover"] = *c.recover;
    cs.push_back(std::move(o));
  }
  j["crashes"] = std::move(cs);
  auto rs = json::array();
  for (const auto& r : cfg.retirements) rs.push_back({{"node", r.node.str()}, {"at", r.at}});
  j["retirements"] = std::move(rs);
  j["tags"] = cfg.tags;
  return j;
}

std::vector<std::string> validate_scenario(const ScenarioConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& v : validate_topology(cfg.topology)) out.push_back(v.kind + ": " + v.detail);

  std::map<NodeId, Tier> tiers;
  for (const auto& n : cfg.topology.nodes) tiers.emplace(n.id, n.tier);
  auto known = [&](const NodeId& id, const std::string& where) {
    if (!tiers.contains(id)) {
      out.push_back("unknown node: " + where + " references " + id.str());
      return false;
    }
    return true;
  };
  auto check_channel = [&](const ChannelModel& m, const std::string& where) {
    if (!(m.loss >= 0.0 && m.loss <= 1.0)) out.push_back("channel out of range: " + where + " loss must be in [0,1]");
    if (!(m.dup >= 0.0 && m.dup <= 1.0)) out.push_back("channel out of range: " + where + " dup must be in [0,1]");
    if (m.delay_min > m.delay_max) out.push_back("channel out of range: " + where + " delay_min > delay_max");
  };
  check_channel(cfg.channel, "channel");
  for (const auto& lc : cfg.link_channels) {
    const auto w = "link_channels " + lc.link.a.str() + "-" + lc.link.b.str();
    if (!cfg.topology.links.contains(lc.link)) out.push_back("unknown link: " + w);
    check_channel(lc.model, w);
  }
  for (const auto& p : cfg.partitions) {
    if (!cfg.topology.links.contains(p.link)) {
      out.push_back("unknown link: partitions " + p.link.a.str() + "-" + p.link.b.str());
    }
    if (p.to && *p.to < p.from) out.push_back("partition ends before it starts");
  }
  if (!(cfg.fetch_prob >= 0.0 && cfg.fetch_prob <= 1.0)) out.push_back("fetch_prob must be in [0,1]");

  std::map<NodeId, std::uint64_t> retire_at;
  for (const auto& r : cfg.retirements) {
    if (known(r.node, "retirements")) {
      if (!retire_at.emplace(r.node, r.at).second) out.push_back("node retires twice: " + r.node.str());
    }
  }
  auto check_key = [&](const std::string& key, const std::string& where) {
    if (cfg.payload == PayloadKind::PN && key != "p" && key != "n") {
      out.push_back("pn payload key must be p or n: " + where);
    }
    if (cfg.payload == PayloadKind::Map && key.empty()) out.push_back("map payload increments need a key: " + where);
  };
  for (const auto& s : cfg.increments) {
    const auto w = "increments at step " + std::to_string(s.step);
    if (!known(s.node, w)) continue;
    check_key(s.key, w);
    if (auto it = retire_at.find(s.node); it != retire_at.end() && s.step >= it->second) {
      out.push_back("increment after retirement: " + s.node.str() + " at step " + std::to_string(s.step));
    }
  }
  if (cfg.random_increments) {
    const auto& r = *cfg.random_increments;
    for (const auto& n : r.node_list) known(n, "increments.nodes");
    if (r.node_list.empty() && r.nodes != "max-tier" && r.nodes != "all" && r.nodes.rfind("tier:", 0) != 0) {
      out.push_back("increments.nodes must be \"max-tier\", \"all\", \"tier:<n>\" or a list of ids");
    }
    if (cfg.payload != PayloadKind::Nat && r.keys.empty()) out.push_back("increments.keys required for map/pn payloads");
    for (const auto& k : r.keys) check_key(k, "increments.keys");
  }
  for (const auto& c : cfg.crashes) {
    if (!known(c.node, "crashes")) continue;
    if (c.recover && *c.recover <= c.at) out.push_back("crash recovers before it happens: " + c.node.str());
  }
  return out;
}

}  // namespace handoff
