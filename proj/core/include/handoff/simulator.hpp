#pragma once

// Deterministic discrete-event simulation of handoff counters over a tiered
// topology with lossy, duplicating, reordering channels and node crashes.
//
// Time is an abstract step counter. Every trace event takes one step; a node
// turn that emits nothing (crashed or retired node) takes one idle step.
// Message delays are measured in steps. The scheduler repeatedly:
//   1. fires the next due scripted crash or recovery, else
//   2. delivers the earliest due message, else
//   3. gives the next node (round robin, id order) its turn: due increments,
//      a fetch, a periodic durable write, the retirement check, then sends
//      according to the gossip policy.
//
// Each node holds a durable state and an in-memory state. Increments are
// written through. Merges of received states go to memory and reach the
// durable state at the next periodic write (immediately when flush_interval
// is 0). Messages always carry the durable state and fetch reads it, so a
// crash, which discards memory, looks to the rest of the system exactly like
// the loss of the messages received since the last write.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "handoff/codec.hpp"
#include "handoff/counter.hpp"
#include "handoff/metrics.hpp"
#include "handoff/rng.hpp"
#include "handoff/scenario.hpp"
#include "handoff/trace.hpp"

namespace handoff {

template <PayloadAlgebra A>
class Simulation {
 public:
  using State = HandoffState<A>;
  using Payload = typename A::Value;
  using MergeFn = std::function<State(const State&, const State&)>;

  /// Hooks for checkers and samplers. All callbacks run synchronously inside
  /// the event loop.
  class Observer {
   public:
    virtual ~Observer() = default;
    virtual void on_event(const TraceEvent&) {}
    /// After any action that may change a durable state. `durable` is the
    /// whole configuration, indexed like nodes(); `changed` names the node
    /// that acted.
    virtual void on_configuration(std::uint64_t /*step*/, std::span<const State> /*durable*/,
                                  const Payload& /*issued*/, std::size_t /*changed*/) {}
    /// Before a delivered message is merged. `full` is the unrestricted state
    /// the sender held; it differs from `message` only when views are on.
    virtual void on_deliver(std::uint64_t /*step*/, const State& /*receiver*/, const State& /*message*/,
                            const State& /*full*/, const State& /*result*/) {}
  };

  struct Options {
    /// Replaces the merge pipeline; used to validate the checker against
    /// deliberately broken merges.
    MergeFn merge;
    bool keep_trace = true;
    bool measure_bytes = true;
  };

  explicit Simulation(ScenarioConfig cfg) : Simulation(std::move(cfg), Options{}) {}

  Simulation(ScenarioConfig cfg, Options options) : cfg_(std::move(cfg)), options_(std::move(options)) {
    if (auto problems = validate_scenario(cfg_); !problems.empty()) {
      std::string msg = "invalid scenario:";
      for (const auto& p : problems) msg += "\n  " + p;
      throw std::invalid_argument(msg);
    }
    if (!options_.merge) options_.merge = [](const State& a, const State& b) { return merge(a, b); };
    build_nodes();
    build_workload();
    build_script();
    metrics_.seed = cfg_.seed;
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  void add_observer(Observer* o) { observers_.push_back(o); }

  /// Main phase: runs until the step budget is spent.
  void run() {
    notify_all_configuration();
    while (step_ < cfg_.steps) {
      if (fire_script()) continue;
      if (!queue_.empty() && queue_.top().due <= step_) {
        auto d = queue_.top();
        queue_.pop();
        deliver(d);
        continue;
      }
      const auto before = step_;
      turn(rr_);
      rr_ = (rr_ + 1) % nodes_.size();
      if (step_ == before) ++step_;
    }
    metrics_.steps = step_;
  }

  /// Ends the faulty phase: recovers crashed nodes, writes pending memory
  /// state, issues increments still scheduled, discards in-flight messages
  /// and switches to lossless synchronous delivery with write-through.
  void begin_quiescence() {
    if (quiescent_) return;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (nodes_[k].crashed) recover(k);
    }
    while (!queue_.empty()) {
      auto d = queue_.top();
      queue_.pop();
      emit_drop(d.from, d.to, d.send_step, "quiescence");
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      auto& n = nodes_[k];
      if (n.retired) continue;
      if (n.dirty) flush(k);
      while (has_pending(n)) apply_increment(k);
    }
    quiescent_ = true;
  }

  /// One lossless round: every live node sends its state to every live
  /// neighbor, in id order, each message merged on arrival. Returns whether
  /// any durable state changed.
  bool gossip_round() {
    begin_quiescence();
    bool changed = false;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (nodes_[k].retired) continue;
      for (auto t : nodes_[k].neighbors) {
        if (nodes_[t].retired) continue;
        changed |= send_now(k, t);
      }
    }
    metrics_.steps = step_;
    return changed;
  }

  // --- inspection -----------------------------------------------------------

  const ScenarioConfig& config() const { return cfg_; }
  std::span<const State> durable() const { return durable_; }
  const State& durable(const NodeId& id) const { return durable_.at(index_of(id)); }
  const State& memory(const NodeId& id) const { return nodes_.at(index_of(id)).memory; }
  const std::vector<TraceEvent>& trace() const { return trace_; }
  const Payload& issued() const { return issued_; }
  std::uint64_t step() const { return step_; }
  bool retired(const NodeId& id) const { return nodes_.at(index_of(id)).retired; }
  bool crashed(const NodeId& id) const { return nodes_.at(index_of(id)).crashed; }
  const RetirementEvidence& evidence(const NodeId& id) const { return nodes_.at(index_of(id)).evidence; }
  std::size_t node_count() const { return nodes_.size(); }
  const NodeId& node_id(std::size_t k) const { return nodes_.at(k).id; }
  Tier node_tier(std::size_t k) const { return nodes_.at(k).tier; }
  bool retired_at(std::size_t k) const { return nodes_.at(k).retired; }
  const MergeFn& merge_fn() const { return options_.merge; }
  /// Scheduled increments per node, after expanding random workloads.
  const std::map<NodeId, std::vector<std::string>>& schedule() const { return schedule_; }
  std::uint64_t scheduled_total() const { return scheduled_total_; }

  std::size_t index_of(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::out_of_range("unknown node " + id.str());
    return it->second;
  }

  Metrics metrics() const {
    Metrics m = metrics_;
    m.steps = step_;
    m.total_increments = increments_;
    m.final_state_entries = 0;
    m.final_state_bytes = 0;
    m.min_final_tier0_vals_entries = 0;
    bool first_t0 = true;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const auto& s = durable_[k];
      m.final_state_entries = std::max<std::uint64_t>(m.final_state_entries, entries(s));
      if (options_.measure_bytes) m.final_state_bytes = std::max<std::uint64_t>(m.final_state_bytes, encode(s).size());
      if (s.tier == 0) {
        m.min_final_tier0_vals_entries =
            first_t0 ? s.vals.size() : std::min<std::uint64_t>(m.min_final_tier0_vals_entries, s.vals.size());
        first_t0 = false;
      }
    }
    return m;
  }

 private:
  struct PendingIncrement {
    std::uint64_t step = 0;
    std::string key;
  };

  struct NodeRuntime {
    NodeId id;
    Tier tier = 0;
    std::vector<std::size_t> neighbors;
    std::vector<std::size_t> servers;  // smaller-tier neighbors
    std::vector<std::size_t> peers;    // same-tier neighbors
    State memory;
    bool dirty = false;
    std::uint64_t last_flush = 0;
    bool crashed = false;
    bool retired = false;
    std::optional<std::uint64_t> retire_at;
    RetirementEvidence evidence;
    std::size_t server_idx = 0;
    std::uint32_t misses = 0;
    std::size_t peer_rr = 0;
    std::set<std::size_t> reply_to;
    std::vector<PendingIncrement> pending;  // sorted by step
    std::size_t pending_head = 0;           // first increment not yet issued
    SplitMix64 gossip_rng{0};
    SplitMix64 fetch_rng{0};
  };

  struct Delivery {
    std::uint64_t due = 0;
    std::uint64_t seq = 0;
    std::size_t from = 0;
    std::size_t to = 0;
    std::uint64_t send_step = 0;
    std::shared_ptr<const State> message;
    std::shared_ptr<const State> full;
  };

  struct LaterFirst {
    bool operator()(const Delivery& x, const Delivery& y) const {
      return x.due != y.due ? x.due > y.due : x.seq > y.seq;
    }
  };

  struct Scripted {
    std::uint64_t at = 0;
    bool crash = true;
    std::size_t node = 0;
  };

  static bool has_pending(const NodeRuntime& n) { return n.pending_head < n.pending.size(); }
  static std::uint64_t next_pending_step(const NodeRuntime& n) { return n.pending[n.pending_head].step; }

  static std::uint64_t entries(const State& s) { return s.vals.size() + s.slots.size() + s.tokens.size(); }

  void build_nodes() {
    auto specs = cfg_.topology.nodes;
    std::sort(specs.begin(), specs.end(), [](const NodeSpec& x, const NodeSpec& y) { return x.id < y.id; });
    for (std::size_t k = 0; k < specs.size(); ++k) index_.emplace(specs[k].id, k);
    const auto adj = cfg_.topology.adjacency();
    nodes_.resize(specs.size());
    durable_.reserve(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k) {
      auto& n = nodes_[k];
      n.id = specs[k].id;
      n.tier = specs[k].tier;
      for (const auto& nb : adj.at(n.id)) {
        const auto j = index_.at(nb);
        n.neighbors.push_back(j);
        if (specs[j].tier < n.tier) n.servers.push_back(j);
        if (specs[j].tier == n.tier) n.peers.push_back(j);
      }
      n.memory = init<A>(n.id, n.tier);
      n.gossip_rng = SplitMix64(derive_seed(cfg_.seed, {kStreamGossip, fnv1a(n.id.str())}));
      n.fetch_rng = SplitMix64(derive_seed(cfg_.seed, {kStreamFetch, fnv1a(n.id.str())}));
      durable_.push_back(n.memory);
    }
    for (const auto& r : cfg_.retirements) nodes_[index_.at(r.node)].retire_at = r.at;
    link_seq_.assign(nodes_.size() * nodes_.size(), 0);
  }

  void build_workload() {
    std::vector<std::vector<PendingIncrement>> per(nodes_.size());
    for (const auto& s : cfg_.increments) {
      for (std::uint64_t c = 0; c < s.count; ++c) per[index_.at(s.node)].push_back({s.step, s.key});
    }
    if (cfg_.random_increments) {
      const auto& r = *cfg_.random_increments;
      std::vector<std::size_t> targets;
      if (!r.node_list.empty()) {
        for (const auto& id : r.node_list) targets.push_back(index_.at(id));
      } else {
        const Tier max_tier = cfg_.topology.max_tier();
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
          const auto t = nodes_[k].tier;
          if (r.nodes == "all" || (r.nodes == "max-tier" && t == max_tier) ||
              (r.nodes.rfind("tier:", 0) == 0 && std::to_string(t) == r.nodes.substr(5))) {
            targets.push_back(k);
          }
        }
      }
      // Nodes retiring at step 0 cannot increment.
      std::erase_if(targets, [&](std::size_t k) { return nodes_[k].retire_at && *nodes_[k].retire_at == 0; });
      if (r.total > 0 && targets.empty()) throw std::invalid_argument("random increments have no eligible node");
      SplitMix64 rng(derive_seed(cfg_.seed, {kStreamWorkload}));
      const std::uint64_t until = r.until > 0 ? r.until : std::max<std::uint64_t>(1, cfg_.steps * 7 / 10);
      for (std::uint64_t c = 0; c < r.total; ++c) {
        const auto k = targets[rng.below(targets.size())];
        std::uint64_t limit = until;
        if (nodes_[k].retire_at) limit = std::min(limit, *nodes_[k].retire_at);
        const auto step = rng.below(std::max<std::uint64_t>(limit, 1));
        std::string key = r.keys.empty() ? std::string{} : r.keys[rng.below(r.keys.size())];
        per[k].push_back({step, std::move(key)});
      }
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      std::stable_sort(per[k].begin(), per[k].end(),
                       [](const PendingIncrement& x, const PendingIncrement& y) { return x.step < y.step; });
      auto& keys = schedule_[nodes_[k].id];
      for (const auto& p : per[k]) keys.push_back(p.key);
      scheduled_total_ += per[k].size();
      nodes_[k].pending = std::move(per[k]);
    }
  }

  void build_script() {
    for (const auto& c : cfg_.crashes) {
      const auto k = index_.at(c.node);
      script_.push_back({c.at, true, k});
      if (c.recover) script_.push_back({*c.recover, false, k});
    }
    std::stable_sort(script_.begin(), script_.end(), [](const Scripted& x, const Scripted& y) { return x.at < y.at; });
  }

  // --- event plumbing -------------------------------------------------------

  void emit(TraceEvent e) {
    e.step = step_++;
    for (auto* o : observers_) o->on_event(e);
    if (options_.keep_trace) trace_.push_back(std::move(e));
  }

  void emit_drop(std::size_t from, std::size_t to, std::uint64_t send_step, const char* reason) {
    TraceEvent e;
    e.kind = EventKind::Drop;
    e.node = nodes_[from].id;
    e.peer = nodes_[to].id;
    e.ref = send_step;
    e.reason = reason;
    ++metrics_.messages_dropped;
    emit(std::move(e));
  }

  void notify_configuration(std::size_t changed) {
    const auto& s = durable_[changed];
    metrics_.max_state_entries = std::max<std::uint64_t>(metrics_.max_state_entries, entries(s));
    metrics_.max_slots_per_node = std::max<std::uint64_t>(metrics_.max_slots_per_node, s.slots.size());
    if (s.tier == 0) metrics_.max_tier0_vals_entries = std::max<std::uint64_t>(metrics_.max_tier0_vals_entries, s.vals.size());
    for (auto* o : observers_) o->on_configuration(step_, durable_, issued_, changed);
  }

  void notify_all_configuration() {
    for (std::size_t k = 0; k < nodes_.size(); ++k) notify_configuration(k);
  }

  bool fire_script() {
    while (script_head_ < script_.size() && script_[script_head_].at <= step_) {
      const auto s = script_[script_head_++];
      auto& n = nodes_[s.node];
      if (n.retired) continue;
      if (s.crash && !n.crashed) {
        crash(s.node);
        return true;
      }
      if (!s.crash && n.crashed) {
        recover(s.node);
        return true;
      }
    }
    return false;
  }

  void crash(std::size_t k) {
    auto& n = nodes_[k];
    n.crashed = true;
    n.memory = durable_[k];
    n.dirty = false;
    n.reply_to.clear();
    n.evidence = {};
    n.misses = 0;
    ++metrics_.crashes;
    TraceEvent e;
    e.kind = EventKind::Crash;
    e.node = n.id;
    emit(std::move(e));
  }

  void recover(std::size_t k) {
    auto& n = nodes_[k];
    n.crashed = false;
    n.memory = durable_[k];
    TraceEvent e;
    e.kind = EventKind::Recover;
    e.node = n.id;
    emit(std::move(e));
  }

  void flush(std::size_t k) {
    auto& n = nodes_[k];
    durable_[k] = n.memory;
    n.dirty = false;
    n.last_flush = step_;
    TraceEvent e;
    e.kind = EventKind::Flush;
    e.node = n.id;
    emit(std::move(e));
    notify_configuration(k);
  }

  void apply_increment(std::size_t k) {
    auto& n = nodes_[k];
    const auto inc = n.pending[n.pending_head++];
    const auto delta = A::unit(inc.key);
    n.memory = add(std::move(n.memory), delta);
    durable_[k] = n.memory;
    n.dirty = false;
    n.last_flush = step_;
    issued_ = A::combine(issued_, delta);
    ++increments_;
    TraceEvent e;
    e.kind = EventKind::Incr;
    e.node = n.id;
    e.key = inc.key;
    emit(std::move(e));
    notify_configuration(k);
  }

  void turn(std::size_t k) {
    auto& n = nodes_[k];
    if (n.crashed || n.retired) return;
    while (has_pending(n) && next_pending_step(n) <= step_) apply_increment(k);

    if (n.fetch_rng.bernoulli(cfg_.fetch_prob)) {
      TraceEvent e;
      e.kind = EventKind::Fetch;
      e.node = n.id;
      e.value = A::counts(fetch(durable_[k]));
      emit(std::move(e));
    }

    if (cfg_.flush_interval > 0 && n.dirty && step_ - n.last_flush >= cfg_.flush_interval) flush(k);

    if (n.retire_at && step_ >= *n.retire_at && !has_pending(n)) {
      const auto& d = durable_[k];
      if (can_retire(d) || (cfg_.cached_retirement && can_retire_cached(d, n.evidence))) {
        n.retired = true;
        ++metrics_.retired;
        TraceEvent e;
        e.kind = EventKind::Retire;
        e.node = n.id;
        emit(std::move(e));
        return;
      }
    }

    std::vector<std::size_t> targets;
    switch (cfg_.gossip) {
      case GossipPolicy::AllNeighbors:
        targets = n.neighbors;
        break;
      case GossipPolicy::RandomNeighbor:
        if (!n.neighbors.empty()) targets.push_back(n.neighbors[n.gossip_rng.below(n.neighbors.size())]);
        break;
      case GossipPolicy::ChosenServer: {
        if (!n.servers.empty()) targets.push_back(n.servers[n.server_idx % n.servers.size()]);
        if (!n.peers.empty()) targets.push_back(n.peers[n.peer_rr++ % n.peers.size()]);
        for (auto r : n.reply_to) {
          if (std::find(targets.begin(), targets.end(), r) == targets.end()) targets.push_back(r);
        }
        n.reply_to.clear();
        break;
      }
    }
    for (auto t : targets) send(k, t);
  }

  std::pair<std::shared_ptr<const State>, std::shared_ptr<const State>> outgoing(std::size_t from, std::size_t to) {
    auto full = std::make_shared<const State>(durable_[from]);
    if (!cfg_.use_view) return {full, full};
    auto restricted = std::make_shared<const State>(view(durable_[from], nodes_[to].id, nodes_[to].tier));
    return {restricted, full};
  }

  void account_message(std::size_t from, std::size_t to, const State& msg, TraceEvent& e) {
    e.slots = msg.slots.size();
    if (options_.measure_bytes) {
      e.bytes = encode(msg).size();
      metrics_.max_message_bytes = std::max<std::uint64_t>(metrics_.max_message_bytes, e.bytes);
    }
    metrics_.max_message_slots = std::max<std::uint64_t>(metrics_.max_message_slots, e.slots);
    if (nodes_[from].tier < nodes_[to].tier) {
      metrics_.max_downward_message_slots = std::max<std::uint64_t>(metrics_.max_downward_message_slots, e.slots);
    }
    ++metrics_.messages_sent;
  }

  void send(std::size_t from, std::size_t to) {
    auto& n = nodes_[from];
    auto [msg, full] = outgoing(from, to);
    const Link link(n.id, nodes_[to].id);
    const auto& ch = cfg_.channel_for(link);
    SplitMix64 rng(derive_seed(cfg_.seed, {kStreamChannel, fnv1a(n.id.str()), fnv1a(nodes_[to].id.str()),
                                           link_seq_[from * nodes_.size() + to]++}));
    const bool cut = cfg_.partitioned(link, step_);
    std::uint32_t copies = 0;
    if (!cut && !rng.bernoulli(ch.loss)) copies = rng.bernoulli(ch.dup) ? 2 : 1;

    TraceEvent e;
    e.kind = EventKind::Send;
    e.node = n.id;
    e.peer = nodes_[to].id;
    e.copies = copies;
    account_message(from, to, *msg, e);
    if (copies == 2) ++metrics_.messages_duplicated;
    const auto send_step = step_;
    emit(std::move(e));

    if (copies == 0) {
      emit_drop(from, to, send_step, cut ? "partition" : "channel");
    }
    for (std::uint32_t c = 0; c < copies; ++c) {
      const auto delay = rng.between(ch.delay_min, ch.delay_max);
      queue_.push(Delivery{send_step + delay, seq_++, from, to, send_step, msg, full});
    }

    if (!n.servers.empty() && to == n.servers[n.server_idx % n.servers.size()] &&
        cfg_.gossip == GossipPolicy::ChosenServer) {
      if (++n.misses >= cfg_.suspect_after) {
        n.server_idx = (n.server_idx + 1) % n.servers.size();
        n.misses = 0;
      }
    }
  }

  /// Merges a message into the receiver; returns whether memory changed.
  bool merge_into(std::size_t to, const Delivery& d) {
    auto& n = nodes_[to];
    auto result = options_.merge(n.memory, *d.message);
    for (auto* o : observers_) o->on_deliver(step_, n.memory, *d.message, *d.full, result);
    record_evidence(n.evidence, n.id, *d.message);
    const bool changed = !(result == n.memory);
    n.memory = std::move(result);
    return changed;
  }

  void deliver(const Delivery& d) {
    auto& n = nodes_[d.to];
    if (n.crashed || n.retired) {
      emit_drop(d.from, d.to, d.send_step, n.crashed ? "crashed" : "retired");
      return;
    }
    const bool changed = merge_into(d.to, d);
    n.reply_to.insert(d.from);
    if (!n.servers.empty() && d.from == n.servers[n.server_idx % n.servers.size()]) n.misses = 0;
    ++metrics_.messages_delivered;
    TraceEvent e;
    e.kind = EventKind::Receive;
    e.node = n.id;
    e.peer = nodes_[d.from].id;
    e.ref = d.send_step;
    emit(std::move(e));
    if (cfg_.flush_interval == 0) {
      durable_[d.to] = n.memory;
      notify_configuration(d.to);
    } else if (changed) {
      n.dirty = true;
    }
  }

  bool send_now(std::size_t from, std::size_t to) {
    auto [msg, full] = outgoing(from, to);
    TraceEvent s;
    s.kind = EventKind::Send;
    s.node = nodes_[from].id;
    s.peer = nodes_[to].id;
    s.copies = 1;
    account_message(from, to, *msg, s);
    const auto send_step = step_;
    emit(std::move(s));

    Delivery d{send_step, seq_++, from, to, send_step, msg, full};
    const bool changed = merge_into(to, d);
    ++metrics_.messages_delivered;
    TraceEvent r;
    r.kind = EventKind::Receive;
    r.node = nodes_[to].id;
    r.peer = nodes_[from].id;
    r.ref = send_step;
    emit(std::move(r));
    durable_[to] = nodes_[to].memory;
    notify_configuration(to);
    return changed;
  }

  ScenarioConfig cfg_;
  Options options_;
  std::vector<NodeRuntime> nodes_;
  std::vector<State> durable_;
  std::map<NodeId, std::size_t> index_;
  std::priority_queue<Delivery, std::vector<Delivery>, LaterFirst> queue_;
  std::vector<Scripted> script_;
  std::size_t script_head_ = 0;
  std::vector<std::uint64_t> link_seq_;
  std::map<NodeId, std::vector<std::string>> schedule_;
  std::uint64_t scheduled_total_ = 0;
  std::vector<Observer*> observers_;
  std::vector<TraceEvent> trace_;
  Metrics metrics_;
  Payload issued_ = A::zero();
  std::uint64_t increments_ = 0;
  std::uint64_t step_ = 0;
  std::uint64_t seq_ = 0;
  std::size_t rr_ = 0;
  bool quiescent_ = false;
};

}  // namespace handoff
