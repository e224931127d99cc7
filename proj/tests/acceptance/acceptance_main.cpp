// Acceptance suite: one PASS/FAIL line per criterion, every threshold pinned
// below. Exits nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "handoff/runner.hpp"
#include "support/generators.hpp"

namespace {

using namespace handoff;
using Clock = std::chrono::steady_clock;

const std::string kDir = HANDOFF_SCENARIO_DIR;

// Pinned thresholds.
constexpr double kReplaySeconds = 1.0;
constexpr std::uint64_t kSweepSeeds = 100;
constexpr std::uint64_t kSweepSteps = 100000;
constexpr double kSweepSeconds = 300.0;
constexpr std::uint64_t kTier0Entries = 2;
constexpr std::uint64_t kBaselineEntries = 46;
constexpr std::uint64_t kViewSeeds = 5;
constexpr std::uint64_t kMaxSlotsWithView = 1;
constexpr std::uint64_t kMaxSlotsWithoutView = 20;
constexpr int kLawCases = 1000;
constexpr std::uint64_t kPropertySamples = 10000;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("%s %d %s:%s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.str().c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void guarded(int id, const char* name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  report(id, name, o);
}

RunOptions checked_with_oracle() {
  RunOptions opts;
  opts.oracle = true;
  return opts;
}

void two_node_replay(Outcome& o) {
  const auto t0 = Clock::now();
  Simulation<NatAlgebra> sim(load_scenario(kDir + "/two_node_handoff.json"));
  sim.run();
  const double secs = seconds_since(t0);
  const auto& a = sim.durable(NodeId("A"));
  const auto& b = sim.durable(NodeId("B"));
  o.detail << " A val=" << a.val << " below=" << a.below << " self=" << a.self() << " vals=" << a.vals.size()
           << " slots=" << a.slots.size() << " tokens=" << a.tokens.size() << "; B val=" << b.val
           << " self=" << b.self() << " vals=" << b.vals.size() << "; " << secs << " s (limit " << kReplaySeconds
           << " s)";
  o.require(a.val == 9 && a.below == 9, "A val/below");
  o.require(a.vals == std::map<NodeId, std::uint64_t>{{NodeId("A"), 0}}, "A vals");
  o.require(a.slots.empty() && a.tokens.empty(), "A slots/tokens");
  o.require(b.val == 9, "B val");
  o.require(b.vals == std::map<NodeId, std::uint64_t>{{NodeId("B"), 9}}, "B vals");
  o.require(secs < kReplaySeconds, "runtime");
}

struct SweepOutcome {
  std::vector<Verdict> verdicts;
  double seconds = 0;
};

SweepOutcome run_sweep() {
  SweepOutcome out;
  auto cfg = load_scenario(kDir + "/datacenters.json");
  cfg.steps = kSweepSteps;
  const auto base = cfg.seed;
  const auto t0 = Clock::now();
  for (std::uint64_t k = 0; k < kSweepSeeds; ++k) {
    cfg.seed = base + k;
    out.verdicts.push_back(run_scenario(cfg, checked_with_oracle()).verdict);
  }
  out.seconds = seconds_since(t0);
  return out;
}

void safety(const SweepOutcome& s, Outcome& o) {
  static const char* kSafety[] = {kFetchBounded, kLocalMonotonicity, kConservation, kValBound,
                                  kBelowBound, kCtvMonotone, kNodeMonotone, kStateShape,
                                  kSlotUniqueness, kTokenUniqueness, kTokenPersistence};
  std::uint64_t violations = 0, checks = 0, fetches = 0, slots = 0, tokens = 0;
  for (const auto& v : s.verdicts) {
    for (const char* name : kSafety) violations += v.log.count(name);
    checks += v.checks;
    fetches += v.fetches;
    slots += v.slots_created;
    tokens += v.tokens_created;
  }
  o.detail << " " << s.verdicts.size() << " seeds x " << kSweepSteps << " steps on 2/4/40 nodes; " << violations
           << " safety violations over " << checks << " configurations, " << fetches << " fetches, " << slots
           << " slots, " << tokens << " tokens; " << s.seconds << " s (limit " << kSweepSeconds << " s)";
  o.require(s.verdicts.size() == kSweepSeeds, "seed count");
  o.require(violations == 0, "zero violations");
  o.require(checks > 0 && fetches > 0 && tokens > 0, "non-vacuous");
  o.require(s.seconds < kSweepSeconds, "runtime");
}

void eventual_accounting(const SweepOutcome& s, Outcome& o) {
  std::uint64_t converged = 0, agree = 0, max_rounds = 0;
  for (const auto& v : s.verdicts) {
    if (v.quiescence.converged && v.log.count(kConvergence) == 0) ++converged;
    if (v.oracle && v.oracle->agree() && v.oracle->baseline == v.oracle->scheduled) ++agree;
    max_rounds = std::max(max_rounds, v.quiescence.rounds);
  }
  o.detail << " " << converged << "/" << s.verdicts.size() << " converged to the scheduled count, " << agree << "/"
           << s.verdicts.size() << " agree with the G-Counter oracle; at most " << max_rounds << " quiescence rounds";
  o.require(converged == s.verdicts.size(), "convergence");
  o.require(agree == s.verdicts.size(), "oracle");
}

void garbage_collection(const SweepOutcome& s, Outcome& o) {
  std::uint64_t clean = 0;
  for (const auto& v : s.verdicts) {
    if (v.quiesced && v.residue.empty()) ++clean;
  }
  const auto abandoned = run_scenario(load_scenario(kDir + "/abandoned_slot.json"), checked_with_oracle()).verdict;
  o.detail << " " << clean << "/" << s.verdicts.size() << " sweep runs left no slots, tokens or self entries;"
           << " abandoned-slot run: " << abandoned.residue.size() << " residual entr"
           << (abandoned.residue.size() == 1 ? "y" : "ies");
  if (!abandoned.residue.empty()) o.detail << " (" << abandoned.residue.front() << ")";
  o.detail << (abandoned.residue_allowed ? ", flagged" : ", not flagged");
  o.require(clean == s.verdicts.size(), "sweep residue");
  o.require(abandoned.residue.size() == 1 && abandoned.residue.front().find(": slot for ") != std::string::npos,
            "exactly one residual slot");
  o.require(abandoned.residue_allowed && abandoned.passed(), "residue flagged, run passes");
}

void scalability(const SweepOutcome& s, Outcome& o) {
  std::uint64_t max_entries = 0, min_final = ~std::uint64_t{0}, baseline = 0;
  for (const auto& v : s.verdicts) {
    max_entries = std::max(max_entries, v.metrics.max_tier0_vals_entries);
    min_final = std::min(min_final, v.metrics.min_final_tier0_vals_entries);
    if (v.oracle) baseline = std::max(baseline, v.oracle->baseline_entries);
  }
  o.detail << " tier-0 vals: at most " << max_entries << " entries in any run, at least " << min_final
           << " at the end of every run (required " << kTier0Entries << "); G-Counter baseline: " << baseline
           << " entries (required " << kBaselineEntries << ")";
  o.require(max_entries == kTier0Entries && min_final == kTier0Entries, "tier-0 entries");
  o.require(baseline == kBaselineEntries, "baseline entries");
}

void view_equivalence(Outcome& o) {
  auto cfg = load_scenario(kDir + "/datacenters.json");
  const auto base = cfg.seed;
  std::uint64_t identical = 0, states = 0;
  for (std::uint64_t k = 0; k < kViewSeeds; ++k) {
    cfg.seed = base + k;
    const auto cmp = compare_view_runs(cfg);
    if (cmp.identical) ++identical;
    states += cmp.states_compared;
  }
  const auto busy = compare_view_runs(load_scenario(kDir + "/busy_server.json"));
  o.detail << " " << identical << "/" << kViewSeeds << " datacenter seeds identical over " << states
           << " state changes; 1 server / 20 clients: identical=" << (busy.identical ? "yes" : "no")
           << ", max slots per server-to-client message " << busy.max_downward_slots_with_view << " with view (limit "
           << kMaxSlotsWithView << "), " << busy.max_downward_slots_without_view << " without (limit "
           << kMaxSlotsWithoutView << ")";
  o.require(identical == kViewSeeds, "datacenter pairs identical");
  o.require(busy.identical, "busy-server pair identical");
  o.require(busy.max_downward_slots_with_view == kMaxSlotsWithView, "slots with view");
  o.require(busy.max_downward_slots_without_view > kMaxSlotsWithView &&
                busy.max_downward_slots_without_view <= kMaxSlotsWithoutView,
            "slots without view");
}

void crash_flush(Outcome& o) {
  auto cfg = load_scenario(kDir + "/crash_flush.json");
  for (std::uint64_t interval : {1, 10, 100}) {
    cfg.flush_interval = interval;
    const auto v = run_scenario(cfg, checked_with_oracle()).verdict;
    o.detail << " flush_interval=" << interval << ": " << (v.passed() ? "pass" : "fail") << " ("
             << v.violations() << " violations, " << v.metrics.crashes << " crashes, converged="
             << (v.quiescence.converged ? "yes" : "no") << ");";
    o.require(v.passed() && v.quiescence.converged && v.metrics.crashes > 0,
              "flush_interval " + std::to_string(interval));
  }
}

template <typename A>
std::uint64_t law_failures(testgen::Rng& rng, int cases, int& laws) {
  std::uint64_t bad = 0;
  auto draw = [&] { return testgen::payload<A>(rng); };
  const std::vector<std::function<bool()>> checks{
      [&] {
        const auto x = draw(), y = draw(), z = draw();
        return A::combine(A::combine(x, y), z) == A::combine(x, A::combine(y, z));
      },
      [&] {
        const auto x = draw(), y = draw();
        return A::combine(x, y) == A::combine(y, x);
      },
      [&] {
        const auto x = draw();
        return A::combine(x, A::zero()) == x;
      },
      [&] {
        const auto x = draw(), y = draw(), z = draw();
        return A::join(A::join(x, y), z) == A::join(x, A::join(y, z));
      },
      [&] {
        const auto x = draw(), y = draw();
        return A::join(x, y) == A::join(y, x);
      },
      [&] {
        const auto x = draw();
        return A::join(x, x) == x;
      },
      [&] { return A::bottom() == A::zero() && A::leq(A::bottom(), draw()); },
      [&] {
        const auto x = draw(), y = draw();
        return A::leq(A::join(x, y), A::combine(x, y));
      },
      [&] {
        const auto x = draw(), y = draw();
        return A::leq(x, y) == (A::join(x, y) == y);
      },
  };

  laws = static_cast<int>(checks.size());
  for (const auto& check : checks) {
    for (int k = 0; k < cases; ++k) bad += check() ? 0 : 1;
  }
  return bad;
}

void algebra_laws(Outcome& o) {
  testgen::Rng rng(20240611);
  int laws = 0;
  const auto nat = law_failures<NatAlgebra>(rng, kLawCases, laws);
  const auto map = law_failures<MapAlgebra>(rng, kLawCases, laws);
  const auto pn = law_failures<PNAlgebra>(rng, kLawCases, laws);
  o.detail << " " << laws << " laws x " << kLawCases << " cases for Nat/Map/PN: " << nat << "/" << map << "/" << pn
           << " failures;";
  o.require(nat == 0 && map == 0 && pn == 0, "laws");
  for (const char* name : {"map_counter", "pn_counter"}) {
    const auto r = run_scenario(load_scenario(kDir + "/" + name + ".json"), checked_with_oracle());
    nlohmann::json totals = r.verdict.oracle ? nlohmann::json(r.verdict.oracle->scheduled) : nlohmann::json();
    o.detail << " " << name << ": " << (r.verdict.passed() ? "converged" : "failed") << " to " << totals.dump()
             << ";";
    o.require(r.verdict.passed() && r.verdict.oracle && r.verdict.oracle->agree(), name);
  }
}

void sampled_properties(Outcome& o) {
  RunOptions opts;
  opts.property_samples = 2 * kPropertySamples;
  const auto r = run_scenario(load_scenario(kDir + "/datacenters.json"), opts);
  std::uint64_t bad = 0;
  for (const char* name : {"merge-idempotence", "self-entry", "val-inflation", "below-inflation", "tier0-below"}) {
    bad += r.verdict.log.count(name);
    o.detail << " " << name << "=" << r.verdict.log.count(name);
  }
  o.detail << " over " << r.property_samples << " sampled merges (required " << kPropertySamples << ")";
  o.require(r.property_samples >= kPropertySamples, "sample count");
  o.require(bad == 0, "properties");
  o.require(r.verdict.passed(), "run passes");
}

}  // namespace

int main() {
  guarded(1, "two-node handoff replay", two_node_replay);
  const auto sweep = run_sweep();
  guarded(2, "safety sweep", [&](Outcome& o) { safety(sweep, o); });
  guarded(3, "eventual accounting", [&](Outcome& o) { eventual_accounting(sweep, o); });
  guarded(4, "garbage collection", [&](Outcome& o) { garbage_collection(sweep, o); });
  guarded(5, "scalability", [&](Outcome& o) { scalability(sweep, o); });
  guarded(6, "view equivalence", view_equivalence);
  guarded(7, "crash and flush", crash_flush);
  guarded(8, "algebra laws", algebra_laws);
  guarded(9, "sampled merge properties", sampled_properties);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
