#include "handoff/checker.hpp"

namespace handoff {

nlohmann::json to_json(const Violation& v) {
  return {{"invariant", v.invariant}, {"step", v.step}, {"node", v.node}, {"detail", v.detail}};
}

ViolationLog check_fetch_criteria(const std::vector<TraceEvent>& trace) {
  ViolationLog log;
  FetchCriteriaChecker checker(log);
  for (const auto& e : trace) checker.on_event(e);
  return log;
}

std::map<std::string, std::vector<GCounterState>> propagate_baseline(
    const Topology& topology, const std::map<NodeId, std::vector<std::string>>& schedule) {
  std::set<std::string> keys;
  for (const auto& [_, ks] : schedule) keys.insert(ks.begin(), ks.end());

  std::map<NodeId, std::size_t> index;
  for (const auto& n : topology.nodes) index.emplace(n.id, index.size());

  std::map<std::string, std::vector<GCounterState>> world;
  for (const auto& key : keys) {
    auto& states = world[key];
    for (const auto& n : topology.nodes) states.push_back(gc_init(n.id));
    for (const auto& [node, ks] : schedule) {
      auto& g = states[index.at(node)];
      for (const auto& k : ks) {
        if (k == key) g = gc_incr(std::move(g));
      }
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& link : topology.links) {
        auto& a = states[index.at(link.a)];
        auto& b = states[index.at(link.b)];
        auto na = gc_merge(a, b);
        auto nb = gc_merge(b, na);
        if (!(na == a) || !(nb == b)) changed = true;
        a = std::move(na);
        b = std::move(nb);
      }
    }
  }
  return world;
}

nlohmann::json to_json(const Verdict& v) {
  nlohmann::json inv = nlohmann::json::object();
  for (const auto& [name, ok] : v.invariants) {
    inv[name] = {{"pass", ok}, {"violations", v.log.count(name)}};
  }
  nlohmann::json kept = nlohmann::json::array();
  for (const auto& x : v.log.kept()) kept.push_back(to_json(x));

  nlohmann::json j{
      {"seed", v.seed},
      {"pass", v.passed()},
      {"invariants", inv},
      {"violations", v.log.count()},
      {"first_violation", v.log.kept().empty() ? nlohmann::json(nullptr) : to_json(v.log.kept().front())},
      {"reported_violations", kept},
      {"counters",
       {{"checked_configurations", v.checks},
        {"fetches", v.fetches},
        {"slots_created", v.slots_created},
        {"tokens_created", v.tokens_created},
        {"tokens_acquired", v.tokens_acquired},
        {"view_comparisons", v.view_comparisons}}},
      {"metrics", to_json(v.metrics)},
      {"note",
       "Certifies only the finite run shown: safety was checked at every configuration of this run and "
       "eventual accounting was observed at the quiescence point reached, not over all future behaviors."},
  };
  if (v.quiesced) {
    j["quiescence"] = {{"converged", v.quiescence.converged}, {"rounds", v.quiescence.rounds}};
    j["residue"] = v.residue;
    j["residue_allowed"] = v.residue_allowed;
  }
  if (v.oracle) {
    j["oracle"] = {{"agree", v.oracle->agree()},
                   {"baseline", v.oracle->baseline},
                   {"scheduled", v.oracle->scheduled},
                   {"baseline_entries", v.oracle->baseline_entries},
                   {"mismatches", v.oracle->mismatches}};
  }
  return j;
}

}  // namespace handoff
