#pragma once

// Checked runs of a scenario: simulate, observe every step, drive to
// quiescence, and assemble a verdict.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "handoff/checker.hpp"
#include "handoff/mutants.hpp"
#include "handoff/scenario.hpp"
#include "handoff/simulator.hpp"

namespace handoff {

struct RunOptions {
  bool check = true;
  bool quiesce = true;
  bool oracle = false;
  /// Compare merges of full and view-restricted states on every delivery.
  bool view_compare = false;
  bool keep_trace = false;
  bool measure_bytes = true;
  /// Merges to sample for algebraic properties; 0 disables sampling.
  std::uint64_t property_samples = 0;
  Mutant mutant = Mutant::None;
};

struct RunResult {
  Verdict verdict;
  std::vector<TraceEvent> trace;
  /// Final durable state of every node, keyed by id.
  nlohmann::json final_states = nlohmann::json::object();
  /// Final fetch of every live node, keyed by id.
  std::map<std::string, Counts> final_fetch;
  std::uint64_t property_samples = 0;
};

template <PayloadAlgebra A>
RunResult run_checked(const ScenarioConfig& cfg, const RunOptions& opts) {
  typename Simulation<A>::Options sim_opts;
  sim_opts.keep_trace = opts.keep_trace;
  sim_opts.measure_bytes = opts.measure_bytes;
  if (opts.mutant != Mutant::None) {
    sim_opts.merge = [m = opts.mutant](const HandoffState<A>& a, const HandoffState<A>& b) {
      return mutant_merge<A>(m, a, b);
    };
  }
  Simulation<A> sim(cfg, std::move(sim_opts));

  RunResult result;
  auto& v = result.verdict;
  v.seed = cfg.seed;

  std::optional<StepChecker<A>> step;
  std::optional<FetchCriteriaChecker> fetch_checker;
  std::optional<ViewEquivalenceChecker<A>> view_checker;
  std::optional<MergePropertySampler<A>> sampler;

  // Forwards events to the stream checker, which is not a simulation observer.
  struct FetchForwarder : Simulation<A>::Observer {
    FetchCriteriaChecker* target = nullptr;
    void on_event(const TraceEvent& e) override { target->on_event(e); }
  } forwarder;

  if (opts.check) {
    step.emplace(sim, v.log);
    sim.add_observer(&*step);
    fetch_checker.emplace(v.log);
    forwarder.target = &*fetch_checker;
    sim.add_observer(&forwarder);
  }
  if (opts.view_compare) {
    view_checker.emplace(sim, v.log);
    sim.add_observer(&*view_checker);
  }
  if (opts.property_samples > 0) {
    sampler.emplace(sim, v.log, opts.property_samples);
    sim.add_observer(&*sampler);
  }

  sim.run();

  if (opts.check) {
    for (const char* name : {kConservation, kValBound, kBelowBound, kCtvMonotone, kNodeMonotone, kStateShape,
                             kSlotUniqueness, kTokenUniqueness, kTokenPersistence, kFetchBounded,
                             kLocalMonotonicity}) {
      v.invariants[name] = true;
    }
  }

  if (opts.quiesce) {
    v.quiesced = true;
    v.quiescence = run_to_quiescence(sim);
    const auto mismatches = convergence_mismatches(sim);
    for (const auto& m : mismatches) v.log.add({kConvergence, sim.step(), "", m});
    if (!v.quiescence.converged) {
      v.log.add({kConvergence, sim.step(), "",
                 "no quiescent round within " + std::to_string(v.quiescence.rounds) + " rounds"});
    }
    v.invariants[kConvergence] = true;
    v.residue = check_gc(sim);
    v.residue_allowed = cfg.has_tag(kTagAllowResidue);
    v.invariants[kGarbageCollection] = v.residue.empty() || v.residue_allowed;
    if (!v.invariants[kGarbageCollection]) {
      v.log.add({kGarbageCollection, sim.step(), "", v.residue.front()});
    }
  }
  if (opts.oracle) {
    v.oracle = compare_oracle(sim);
    v.invariants[kOracle] = true;
    for (const auto& m : v.oracle->mismatches) v.log.add({kOracle, sim.step(), "", m});
  }
  if (opts.view_compare) v.invariants[kViewEquivalence] = true;
  if (sampler) {
    for (const char* name : {"merge-idempotence", "self-entry", "val-inflation", "below-inflation", "tier0-below"}) {
      v.invariants[name] = true;
    }
    result.property_samples = sampler->sampled();
  }

  for (auto& [name, ok] : v.invariants) {
    if (v.log.count(name) > 0) ok = false;
  }

  if (step) {
    v.checks = step->checks();
    v.slots_created = step->slots_created();
    v.tokens_created = step->tokens_created();
    v.tokens_acquired = step->tokens_acquired();
  }
  if (fetch_checker) v.fetches = fetch_checker->fetches();
  if (view_checker) v.view_comparisons = view_checker->compared();

  v.metrics = sim.metrics();
  v.metrics.convergence_rounds = v.quiescence.rounds;
  if (v.oracle) v.metrics.baseline_entries = v.oracle->baseline_entries;

  for (std::size_t k = 0; k < sim.node_count(); ++k) {
    const auto& s = sim.durable()[k];
    result.final_states[s.id.str()] = to_json(s);
    if (!sim.retired_at(k)) result.final_fetch[s.id.str()] = A::counts(fetch(s));
  }
  if (opts.keep_trace) result.trace = sim.trace();
  return result;
}

/// Runs the scenario with the payload algebra it names.
RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opts);

struct SweepRow {
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t violations = 0;
  std::uint64_t rounds = 0;
  std::uint64_t residue = 0;
  bool pass = false;
};

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& r);
SweepRow sweep_row(const Verdict& v);

struct ViewComparison {
  bool identical = false;
  std::uint64_t states_compared = 0;
  std::string first_difference;
  /// Largest slots map in any message to a higher-tier node.
  std::uint64_t max_downward_slots_with_view = 0;
  std::uint64_t max_downward_slots_without_view = 0;
  std::uint64_t max_message_bytes_with_view = 0;
  std::uint64_t max_message_bytes_without_view = 0;
};

/// Runs the scenario twice, with and without views, and compares the
/// sequence of durable states (including quiescence).
template <PayloadAlgebra A>
ViewComparison compare_view_runs(ScenarioConfig cfg) {
  ViewComparison out;
  std::vector<typename StateRecorder<A>::Entry> logs[2];
  Metrics metrics[2];
  for (int pass = 0; pass < 2; ++pass) {
    cfg.use_view = pass == 0;
    typename Simulation<A>::Options o;
    o.keep_trace = false;
    Simulation<A> sim(cfg, o);
    StateRecorder<A> rec;
    sim.add_observer(&rec);
    sim.run();
    run_to_quiescence(sim);
    logs[pass] = rec.entries();
    metrics[pass] = sim.metrics();
  }
  out.states_compared = std::min(logs[0].size(), logs[1].size());
  out.identical = logs[0] == logs[1];
  if (!out.identical) {
    for (std::size_t k = 0; k < out.states_compared; ++k) {
      if (!(logs[0][k] == logs[1][k])) {
        out.first_difference = "state change " + std::to_string(k) + " at step " + std::to_string(logs[0][k].step);
        break;
      }
    }
    if (out.first_difference.empty()) out.first_difference = "different number of state changes";
  }
  out.max_downward_slots_with_view = metrics[0].max_downward_message_slots;
  out.max_downward_slots_without_view = metrics[1].max_downward_message_slots;
  out.max_message_bytes_with_view = metrics[0].max_message_bytes;
  out.max_message_bytes_without_view = metrics[1].max_message_bytes;
  return out;
}

ViewComparison compare_view_runs(const ScenarioConfig& cfg);

}  // namespace handoff
