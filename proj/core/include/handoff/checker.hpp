#pragma once

// Global observer for simulation runs.
//
// A configuration is the set of durable states of all live (non-retired)
// nodes; messages in flight are not part of it. Checks run after every action
// that changes a durable state.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "handoff/counter.hpp"
#include "handoff/gcounter.hpp"
#include "handoff/metrics.hpp"
#include "handoff/simulator.hpp"
#include "handoff/trace.hpp"

namespace handoff {

// Invariant names used in violations and verdicts.
inline constexpr const char* kConservation = "conservation";
inline constexpr const char* kValBound = "val-bound";
inline constexpr const char* kBelowBound = "below-bound";
inline constexpr const char* kCtvMonotone = "ctv-monotone";
inline constexpr const char* kNodeMonotone = "node-monotone";
inline constexpr const char* kStateShape = "state-shape";
inline constexpr const char* kSlotUniqueness = "slot-uniqueness";
inline constexpr const char* kTokenUniqueness = "token-uniqueness";
inline constexpr const char* kTokenPersistence = "token-persistence";
inline constexpr const char* kFetchBounded = "fetch-bounded";
inline constexpr const char* kLocalMonotonicity = "local-monotonicity";
inline constexpr const char* kConvergence = "convergence";
inline constexpr const char* kGarbageCollection = "garbage-collection";
inline constexpr const char* kOracle = "oracle";
inline constexpr const char* kViewEquivalence = "view-equivalence";

struct Violation {
  std::string invariant;
  std::uint64_t step = 0;
  std::string node;
  std::string detail;
};

nlohmann::json to_json(const Violation& v);

/// Collects violations, keeping the first few in full.
class ViolationLog {
 public:
  static constexpr std::size_t kKept = 32;

  void add(Violation v) {
    ++count_;
    ++per_invariant_[v.invariant];
    if (kept_.size() < kKept) kept_.push_back(std::move(v));
  }
  std::uint64_t count() const { return count_; }
  std::uint64_t count(const std::string& invariant) const {
    auto it = per_invariant_.find(invariant);
    return it == per_invariant_.end() ? 0 : it->second;
  }
  const std::vector<Violation>& kept() const { return kept_; }
  bool empty() const { return count_ == 0; }

 private:
  std::uint64_t count_ = 0;
  std::map<std::string, std::uint64_t> per_invariant_;
  std::vector<Violation> kept_;
};

template <PayloadAlgebra A>
struct EnabledToken {
  HandoffId id;
  typename A::Value n;
  friend bool operator==(const EnabledToken&, const EnabledToken&) = default;
};

/// Tokens held anywhere in `world` whose destination holds the slot with
/// exactly matching clocks; each id counted once.
template <PayloadAlgebra A>
std::vector<EnabledToken<A>> enabled_tokens(std::span<const HandoffState<A>> world) {
  std::map<NodeId, const HandoffState<A>*> by_id;
  for (const auto& s : world) by_id.emplace(s.id, &s);
  std::map<HandoffId, typename A::Value> found;
  for (const auto& s : world) {
    for (const auto& [key, token] : s.tokens) {
      auto dst = by_id.find(key.dst);
      if (dst == by_id.end()) continue;
      auto slot = dst->second->slots.find(key.src);
      if (slot == dst->second->slots.end() || slot->second != token.ck) continue;
      found.try_emplace(HandoffId{key.src, key.dst, token.ck}, token.n);
    }
  }
  std::vector<EnabledToken<A>> out;
  for (auto& [id, n] : found) out.push_back({id, n});
  return out;
}

/// Cumulative tier value: self entries of nodes with tier <= k plus enabled
/// tokens whose source has tier <= k.
template <PayloadAlgebra A>
typename A::Value ctv(std::span<const HandoffState<A>> world, Tier k) {
  std::map<NodeId, Tier> tiers;
  auto acc = A::zero();
  for (const auto& s : world) {
    tiers.emplace(s.id, s.tier);
    if (s.tier <= k) acc = A::combine(acc, s.self());
  }
  for (const auto& t : enabled_tokens<A>(world)) {
    auto it = tiers.find(t.id.src);
    if (it != tiers.end() && it->second <= k) acc = A::combine(acc, t.n);
  }
  return acc;
}

/// Checks the fetch criteria over a stream of events: a fetch never exceeds
/// the increments issued before it, and between two fetches at a node the
/// value grows by at least the node's own increments in between (the first
/// fetch is compared against an implicit 0). Keys are checked independently.
class FetchCriteriaChecker {
 public:
  explicit FetchCriteriaChecker(ViolationLog& log) : log_(log) {}

  void on_event(const TraceEvent& e) {
    if (e.kind == EventKind::Incr) {
      ++global_[e.key];
      ++local_[e.node][e.key];
      return;
    }
    if (e.kind != EventKind::Fetch) return;
    ++fetches_;
    auto& since = local_[e.node];
    auto& last = last_[e.node];
    std::set<std::string> keys;
    for (const auto& [k, _] : e.value) keys.insert(k);
    for (const auto& [k, _] : since) keys.insert(k);
    for (const auto& [k, _] : last) keys.insert(k);
    for (const auto& k : keys) {
      const auto v = get(e.value, k);
      if (v > get(global_, k)) {
        log_.add({kFetchBounded, e.step, e.node.str(),
                  key_label(k) + "fetch " + std::to_string(v) + " exceeds " + std::to_string(get(global_, k)) +
                      " increments issued"});
      }
      const auto prev = get(last, k);
      const auto need = get(since, k);
      if (v < prev || v - prev < need) {
        log_.add({kLocalMonotonicity, e.step, e.node.str(),
                  key_label(k) + "fetch " + std::to_string(v) + " after previous fetch " + std::to_string(prev) +
                      " at step " + std::to_string(last_step_[e.node]) + " with " + std::to_string(need) +
                      " local increments in between"});
      }
    }
    last = e.value;
    last_step_[e.node] = e.step;
    since.clear();
  }

  std::uint64_t fetches() const { return fetches_; }

 private:
  static std::uint64_t get(const Counts& c, const std::string& k) {
    auto it = c.find(k);
    return it == c.end() ? 0 : it->second;
  }
  static std::string key_label(const std::string& k) { return k.empty() ? std::string{} : "key " + k + ": "; }

  ViolationLog& log_;
  Counts global_;
  std::map<NodeId, Counts> local_;
  std::map<NodeId, Counts> last_;
  std::map<NodeId, std::uint64_t> last_step_;
  std::uint64_t fetches_ = 0;
};

/// Runs FetchCriteriaChecker over a complete trace.
ViolationLog check_fetch_criteria(const std::vector<TraceEvent>& trace);

/// Per-step safety checks. The configuration is tracked incrementally: only
/// the node that acted is re-examined, and the CTV is recomputed from cached
/// per-node self entries and an index of distinct tokens and live slots.
template <PayloadAlgebra A>
class StepChecker : public Simulation<A>::Observer {
 public:
  using State = HandoffState<A>;
  using Payload = typename A::Value;

  StepChecker(const Simulation<A>& sim, ViolationLog& log) : sim_(sim), log_(log) {
    const auto n = sim.node_count();
    prev_.resize(n);
    for (std::size_t k = 0; k < n; ++k) max_tier_ = std::max(max_tier_, sim.node_tier(k));
    tier_sum_.assign(max_tier_ + 1, A::zero());
    tier_dirty_.assign(max_tier_ + 1, true);
    last_ctv_.assign(max_tier_ + 1, A::zero());
  }

  void on_event(const TraceEvent& e) override {
    if (e.kind != EventKind::Retire) return;
    const auto k = sim_.index_of(e.node);
    withdraw(k);
    prev_[k].reset();
    sweep(e.step, e.node.str());
    tier_dirty_[sim_.node_tier(k)] = true;
    check_configuration(e.step, e.node.str());
  }

  void on_configuration(std::uint64_t step, std::span<const State> durable, const Payload& issued,
                        std::size_t changed) override {
    issued_ = &issued;
    if (sim_.retired_at(changed)) return;
    const auto& s = durable[changed];
    const auto node = s.id.str();
    ++checks_;

    if (auto problem = shape_violation(s); !problem.empty()) log_.add({kStateShape, step, node, problem});
    if (s.tier == 0 && !(s.below == A::zero())) log_.add({kStateShape, step, node, "tier-0 below is not zero"});
    if (!A::leq(s.below, s.val)) log_.add({kStateShape, step, node, "below exceeds val"});

    if (prev_[changed]) {
      const auto& p = *prev_[changed];
      if (!A::leq(p.val, s.val)) log_.add({kNodeMonotone, step, node, "val decreased"});
      if (!A::leq(p.below, s.below)) log_.add({kNodeMonotone, step, node, "below decreased"});
    }

    withdraw(changed);
    deposit(changed, s, step);
    sweep(step, node);
    prev_[changed] = s;
    tier_dirty_[s.tier] = true;

    const auto c = check_configuration(step, node);
    if (!A::leq(s.val, c[s.tier])) log_.add({kValBound, step, node, "val exceeds CTV of its tier"});
    if (s.tier > 0 && !A::leq(s.below, c[s.tier - 1])) {
      log_.add({kBelowBound, step, node, "below exceeds CTV of the tier below"});
    }
  }

  std::uint64_t checks() const { return checks_; }
  std::uint64_t slots_created() const { return slot_ever_.size(); }
  std::uint64_t tokens_created() const { return token_ever_.size(); }
  std::uint64_t tokens_acquired() const { return acquired_; }
  const std::vector<Payload>& last_ctv() const { return last_ctv_; }

 private:
  struct SlotKey {
    NodeId dst;
    NodeId src;
    friend auto operator<=>(const SlotKey&, const SlotKey&) = default;
  };

  struct TokenEntry {
    Payload n;
    Tier src_tier = 0;
    std::uint32_t holders = 0;
  };

  std::vector<Payload> check_configuration(std::uint64_t step, const std::string& node) {
    auto c = compute_ctv();
    if (issued_ && !(c[max_tier_] == *issued_)) {
      log_.add({kConservation, step, node, "CTV at max tier differs from increments issued"});
    }
    for (Tier k = 1; k <= max_tier_; ++k) {
      if (!A::leq(c[k - 1], c[k])) log_.add({kCtvMonotone, step, node, "CTV not monotone in tier"});
    }
    for (Tier k = 0; k <= max_tier_; ++k) {
      if (!A::leq(last_ctv_[k], c[k])) {
        log_.add({kCtvMonotone, step, node, "CTV of tier " + std::to_string(k) + " decreased"});
      }
    }
    last_ctv_ = c;
    return c;
  }

  std::vector<Payload> compute_ctv() {
    for (Tier t = 0; t <= max_tier_; ++t) {
      if (!tier_dirty_[t]) continue;
      auto acc = A::zero();
      for (std::size_t k = 0; k < prev_.size(); ++k) {
        if (prev_[k] && prev_[k]->tier == t) acc = A::combine(acc, prev_[k]->self());
      }
      tier_sum_[t] = std::move(acc);
      tier_dirty_[t] = false;
    }
    std::vector<Payload> per_tier = tier_sum_;
    for (const auto& [id, entry] : tokens_) {
      if (enabled(id)) per_tier[entry.src_tier] = A::combine(per_tier[entry.src_tier], entry.n);
    }
    for (Tier t = 1; t <= max_tier_; ++t) per_tier[t] = A::combine(per_tier[t - 1], per_tier[t]);
    return per_tier;
  }

  bool enabled(const HandoffId& id) const {
    auto it = slots_.find(SlotKey{id.dst, id.src});
    return it != slots_.end() && it->second == id.ck;
  }

  // Removes node k's previous state from the index.
  void withdraw(std::size_t k) {
    if (!prev_[k]) return;
    const auto& p = *prev_[k];
    for (const auto& [src, ck] : p.slots) slots_.erase(SlotKey{p.id, src});
    for (const auto& [key, token] : p.tokens) {
      auto it = tokens_.find(HandoffId{key.src, key.dst, token.ck});
      if (it != tokens_.end() && it->second.holders > 0) --it->second.holders;
    }
  }

  // Adds node k's new state to the index and runs the ledgers.
  void deposit(std::size_t k, const State& s, std::uint64_t step) {
    const auto node = s.id.str();
    const State* prev = prev_[k] ? &*prev_[k] : nullptr;
    for (const auto& [src, ck] : s.slots) {
      slots_[SlotKey{s.id, src}] = ck;
      const bool had = prev && prev->slots.contains(src) && prev->slots.at(src) == ck;
      if (!had && !slot_ever_.insert(HandoffId{src, s.id, ck}).second) {
        log_.add({kSlotUniqueness, step, node, "slot " + to_string(HandoffId{src, s.id, ck}) + " created twice"});
      }
    }
    for (const auto& [key, token] : s.tokens) {
      const HandoffId id{key.src, key.dst, token.ck};
      auto& entry = tokens_[id];
      if (entry.holders == 0) {
        entry.n = token.n;
        entry.src_tier = sim_.node_tier(sim_.index_of(key.src));
      }
      ++entry.holders;
      if (key.src != s.id) continue;
      const bool had = prev && prev->tokens.contains(key) && prev->tokens.at(key).ck == token.ck;
      if (had) continue;
      if (!token_ever_.insert(id).second) {
        log_.add({kTokenUniqueness, step, node, "token " + to_string(id) + " created twice"});
      } else if (!enabled(id)) {
        log_.add({kTokenUniqueness, step, node, "token " + to_string(id) + " created without its slot"});
      }
    }
    // Slots that vanished after their token was created were filled.
    if (prev) {
      for (const auto& [src, ck] : prev->slots) {
        if (s.slots.contains(src) && s.slots.at(src) == ck) continue;
        if (token_ever_.contains(HandoffId{src, s.id, ck})) ++acquired_;
      }
    }
  }

  // Drops tokens no live node holds; losing one whose slot still exists is a
  // violation.
  void sweep(std::uint64_t step, const std::string& node) {
    for (auto it = tokens_.begin(); it != tokens_.end();) {
      if (it->second.holders > 0) {
        ++it;
        continue;
      }
      if (enabled(it->first)) {
        log_.add({kTokenPersistence, step, node, "token " + to_string(it->first) + " vanished while its slot exists"});
      }
      it = tokens_.erase(it);
    }
  }

  const Simulation<A>& sim_;
  ViolationLog& log_;
  Tier max_tier_ = 0;
  std::vector<std::optional<State>> prev_;
  std::vector<Payload> tier_sum_;
  std::vector<bool> tier_dirty_;
  std::vector<Payload> last_ctv_;
  std::map<SlotKey, ClockPair> slots_;
  std::map<HandoffId, TokenEntry> tokens_;
  std::set<HandoffId> slot_ever_;
  std::set<HandoffId> token_ever_;
  const Payload* issued_ = nullptr;
  std::uint64_t checks_ = 0;
  std::uint64_t acquired_ = 0;
};

/// Compares, for every delivered message restricted by a view, the merge of
/// the full state with the merge of the restricted one.
template <PayloadAlgebra A>
class ViewEquivalenceChecker : public Simulation<A>::Observer {
 public:
  using State = HandoffState<A>;

  ViewEquivalenceChecker(const Simulation<A>& sim, ViolationLog& log) : sim_(sim), log_(log) {}

  void on_deliver(std::uint64_t step, const State& receiver, const State& message, const State& full,
                  const State& result) override {
    if (&message == &full || message == full) return;
    ++compared_;
    if (!(sim_.merge_fn()(receiver, full) == result)) {
      log_.add({kViewEquivalence, step, receiver.id.str(),
                "merge with the view of " + full.id.str() + " differs from merge with its full state"});
    }
  }

  std::uint64_t compared() const { return compared_; }

 private:
  const Simulation<A>& sim_;
  ViolationLog& log_;
  std::uint64_t compared_ = 0;
};

/// Samples merges and checks algebraic properties of their results:
/// idempotence against a duplicate of the same message, self-entry
/// discipline, val/below inflation, and tier-0 below = 0.
template <PayloadAlgebra A>
class MergePropertySampler : public Simulation<A>::Observer {
 public:
  using State = HandoffState<A>;

  MergePropertySampler(const Simulation<A>& sim, ViolationLog& log, std::uint64_t limit = ~std::uint64_t{0})
      : sim_(sim), log_(log), limit_(limit) {}

  void on_deliver(std::uint64_t step, const State& receiver, const State& message, const State&,
                  const State& result) override {
    if (sampled_ >= limit_) return;
    ++sampled_;
    const auto node = receiver.id.str();
    if (!(sim_.merge_fn()(result, message) == result)) {
      log_.add({"merge-idempotence", step, node, "merging a duplicate changed the state"});
    }
    if (auto p = shape_violation(result); !p.empty()) log_.add({"self-entry", step, node, p});
    if (!A::leq(receiver.val, result.val)) log_.add({"val-inflation", step, node, "merge decreased val"});
    if (!A::leq(receiver.below, result.below)) log_.add({"below-inflation", step, node, "merge decreased below"});
    if (result.tier == 0 && !(result.below == A::zero())) {
      log_.add({"tier0-below", step, node, "tier-0 below is not zero"});
    }
  }

  std::uint64_t sampled() const { return sampled_; }

 private:
  const Simulation<A>& sim_;
  ViolationLog& log_;
  std::uint64_t limit_;
  std::uint64_t sampled_ = 0;
};

/// Records a digest of every durable state change, for comparing runs.
template <PayloadAlgebra A>
class StateRecorder : public Simulation<A>::Observer {
 public:
  struct Entry {
    std::uint64_t step = 0;
    std::size_t node = 0;
    std::string state;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  void on_configuration(std::uint64_t step, std::span<const HandoffState<A>> durable, const typename A::Value&,
                        std::size_t changed) override {
    log_.push_back({step, changed, encode(durable[changed])});
  }

  const std::vector<Entry>& entries() const { return log_; }

 private:
  std::vector<Entry> log_;
};

struct QuiescenceResult {
  bool converged = false;
  std::uint64_t rounds = 0;
};

/// Drives a simulation to quiescence: lossless gossip rounds until one full
/// round changes no state, or the limit is reached.
template <PayloadAlgebra A>
QuiescenceResult run_to_quiescence(Simulation<A>& sim, std::uint64_t round_limit = 0) {
  if (round_limit == 0) round_limit = sim.config().quiescence_round_limit;
  if (round_limit == 0) round_limit = 4 * sim.node_count();
  QuiescenceResult r;
  sim.begin_quiescence();
  while (r.rounds < round_limit) {
    ++r.rounds;
    if (!sim.gossip_round()) {
      r.converged = true;
      break;
    }
  }
  return r;
}

/// Per-key totals of a schedule.
inline Counts schedule_counts(const std::map<NodeId, std::vector<std::string>>& schedule) {
  Counts c;
  for (const auto& [_, keys] : schedule) {
    for (const auto& k : keys) ++c[k];
  }
  return c;
}

/// Every live node's fetch equals the scheduled per-key totals.
template <PayloadAlgebra A>
std::vector<std::string> convergence_mismatches(const Simulation<A>& sim) {
  std::vector<std::string> out;
  const auto expected = schedule_counts(sim.schedule());
  auto want = expected;
  std::erase_if(want, [](const auto& kv) { return kv.second == 0; });
  for (std::size_t k = 0; k < sim.node_count(); ++k) {
    if (sim.retired_at(k)) continue;
    auto got = A::counts(fetch(sim.durable()[k]));
    std::erase_if(got, [](const auto& kv) { return kv.second == 0; });
    if (got != want) {
      nlohmann::json g = got;
      nlohmann::json w = want;
      out.push_back(sim.node_id(k).str() + " fetch " + g.dump() + " expected " + w.dump());
    }
  }
  return out;
}

/// Residue left after quiescence, one line per entry, naming its owner.
template <PayloadAlgebra A>
std::vector<std::string> check_gc(const Simulation<A>& sim) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < sim.node_count(); ++k) {
    if (sim.retired_at(k)) continue;
    const auto& s = sim.durable()[k];
    for (const auto& [src, ck] : s.slots) {
      out.push_back(s.id.str() + ": slot for " + src.str() + " (" + std::to_string(ck.sck) + "," +
                    std::to_string(ck.dck) + ")");
    }
    for (const auto& [key, token] : s.tokens) {
      out.push_back(s.id.str() + ": token " + to_string(HandoffId{key.src, key.dst, token.ck}));
    }
    if (s.tier != 0 && (s.vals.size() != 1 || !(s.self() == A::zero()))) {
      out.push_back(s.id.str() + ": non-zero self entry");
    }
  }
  return out;
}

struct OracleReport {
  /// Per-key G-Counter fetch after full propagation, identical at all nodes
  /// when `agree` holds.
  Counts baseline;
  Counts scheduled;
  std::uint64_t baseline_entries = 0;
  std::vector<std::string> mismatches;
  bool agree() const { return mismatches.empty(); }
};

/// G-Counter world fed with the executed increments of each node and
/// propagated losslessly over every link to a fixpoint.
std::map<std::string, std::vector<GCounterState>> propagate_baseline(
    const Topology& topology, const std::map<NodeId, std::vector<std::string>>& schedule);

/// Compares handoff fetches against the baseline and the schedule.
template <PayloadAlgebra A>
OracleReport compare_oracle(const Simulation<A>& sim) {
  OracleReport r;
  r.scheduled = schedule_counts(sim.schedule());
  const auto world = propagate_baseline(sim.config().topology, sim.schedule());
  for (const auto& [key, states] : world) {
    std::optional<std::uint64_t> agreed;
    for (const auto& g : states) {
      r.baseline_entries = std::max<std::uint64_t>(r.baseline_entries, g.entries.size());
      const auto v = gc_fetch(g);
      if (agreed && *agreed != v) r.mismatches.push_back("baseline " + g.id.str() + " disagrees on " + key);
      agreed = v;
    }
    if (agreed) r.baseline[key] = *agreed;
  }
  for (const auto& [key, n] : r.scheduled) {
    auto it = r.baseline.find(key);
    const std::uint64_t b = it == r.baseline.end() ? 0 : it->second;
    if (b != n) {
      r.mismatches.push_back("baseline total " + std::to_string(b) + " for key '" + key + "' but " +
                             std::to_string(n) + " scheduled");
    }
  }
  for (const auto& m : convergence_mismatches(sim)) r.mismatches.push_back(m);
  return r;
}

/// Outcome of one checked run.
struct Verdict {
  std::uint64_t seed = 0;
  std::map<std::string, bool> invariants;
  ViolationLog log;
  std::uint64_t checks = 0;
  std::uint64_t fetches = 0;
  std::uint64_t slots_created = 0;
  std::uint64_t tokens_created = 0;
  std::uint64_t tokens_acquired = 0;
  std::uint64_t view_comparisons = 0;
  bool quiesced = false;
  QuiescenceResult quiescence;
  std::vector<std::string> residue;
  bool residue_allowed = false;
  std::optional<OracleReport> oracle;
  Metrics metrics;

  bool passed() const {
    return std::all_of(invariants.begin(), invariants.end(), [](const auto& kv) { return kv.second; });
  }
  std::uint64_t violations() const { return log.count(); }
};

nlohmann::json to_json(const Verdict& v);

}  // namespace handoff
