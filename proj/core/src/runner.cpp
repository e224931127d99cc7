#include "handoff/runner.hpp"

#include <array>
#include <sstream>
#include <utility>

namespace handoff {

namespace {

constexpr std::array<std::pair<Mutant, std::string_view>, 4> kMutants{{
    {Mutant::None, "none"},
    {Mutant::SkipDiscardTokens, "skip-discardtokens"},
    {Mutant::FillAnyClock, "fill-any-clock"},
    {Mutant::NoDckIncrement, "no-dck-increment"},
}};

}  // namespace

std::string_view to_string(Mutant m) {
  for (const auto& [mutant, name] : kMutants) {
    if (mutant == m) return name;
  }
  return "?";
}

std::optional<Mutant> parse_mutant(std::string_view s) {
  for (const auto& [mutant, name] : kMutants) {
    if (name == s) return mutant;
  }
  return std::nullopt;
}

RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  switch (cfg.payload) {
    case PayloadKind::Nat:
      return run_checked<NatAlgebra>(cfg, opts);
    case PayloadKind::Map:
      return run_checked<MapAlgebra>(cfg, opts);
    case PayloadKind::PN:
      return run_checked<PNAlgebra>(cfg, opts);
  }
  throw std::logic_error("unknown payload kind");
}

ViewComparison compare_view_runs(const ScenarioConfig& cfg) {
  switch (cfg.payload) {
    case PayloadKind::Nat:
      return compare_view_runs<NatAlgebra>(cfg);
    case PayloadKind::Map:
      return compare_view_runs<MapAlgebra>(cfg);
    case PayloadKind::PN:
      return compare_view_runs<PNAlgebra>(cfg);
  }
  throw std::logic_error("unknown payload kind");
}

std::string sweep_csv_header() { return "seed,steps,violations,convergence_rounds,residue,pass"; }

std::string sweep_csv_row(const SweepRow& r) {
  std::ostringstream out;
  out << r.seed << ',' << r.steps << ',' << r.violations << ',' << r.rounds << ',' << r.residue << ','
      << (r.pass ? 1 : 0);
  return out.str();
}

SweepRow sweep_row(const Verdict& v) {
  return {v.seed, v.metrics.steps, v.violations(), v.quiescence.rounds, v.residue.size(), v.passed()};
}

}  // namespace handoff
