// handoff: validate scenarios, run and check simulations, sweep seeds.
//
// Exit codes: 0 ok, 1 invariant or validation failure, 2 usage or parse error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "handoff/runner.hpp"
#include "handoff/scenario.hpp"
#include "handoff/trace.hpp"

namespace {

using namespace handoff;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

void write_metrics(const std::string& path, const std::vector<Metrics>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& m : rows) j.push_back(to_json(m));
    out << (rows.size() == 1 ? j.front() : j).dump(2) << '\n';
    return;
  }
  out << metrics_csv_header() << '\n';
  for (const auto& m : rows) out << metrics_csv_row(m) << '\n';
}

ScenarioConfig load_checked(const std::string& path) {
  auto cfg = load_scenario(path);
  if (auto problems = validate_scenario(cfg); !problems.empty()) {
    for (const auto& p : problems) std::cerr << p << '\n';
    throw std::invalid_argument("scenario is not valid");
  }
  return cfg;
}

int cmd_validate(const std::string& path) {
  const auto cfg = load_scenario(path);
  const auto problems = validate_scenario(cfg);
  for (const auto& p : problems) std::cout << p << '\n';
  if (!problems.empty()) return kFailure;
  std::cout << "ok: " << cfg.topology.nodes.size() << " nodes, " << cfg.topology.links.size() << " links\n";
  return kOk;
}

struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::string trace_out;
  std::string metrics_out;
  std::string verdict_out;
  bool check = false;
  bool oracle = false;
  bool view_compare = false;
  std::string mutant = "none";
};

Mutant mutant_flag(const std::string& name) {
  auto m = parse_mutant(name);
  if (!m) throw CLI::ValidationError("--mutant", "unknown mutant " + name);
  return *m;
}

int cmd_run(const std::string& path, RunFlags f) {
  auto cfg = load_checked(path);
  if (!f.seed) {
    if (auto s = env("HANDOFF_SEED")) f.seed = std::stoull(*s);
  }
  if (f.trace_out.empty()) f.trace_out = env("HANDOFF_TRACE_OUT").value_or("");
  if (f.metrics_out.empty()) f.metrics_out = env("HANDOFF_METRICS_OUT").value_or("");
  if (f.seed) cfg.seed = *f.seed;

  RunOptions opts;
  opts.check = f.check;
  opts.oracle = f.oracle;
  opts.view_compare = f.view_compare;
  opts.keep_trace = !f.trace_out.empty();
  opts.mutant = mutant_flag(f.mutant);
  const auto result = run_scenario(cfg, opts);
  const auto& v = result.verdict;

  if (!f.trace_out.empty()) {
    std::ofstream out(f.trace_out);
    if (!out) throw std::runtime_error("cannot write " + f.trace_out);
    write_trace(out, result.trace);
  }
  if (!f.metrics_out.empty()) write_metrics(f.metrics_out, {v.metrics});

  nlohmann::json fetches = nlohmann::json::object();
  for (const auto& [node, counts] : result.final_fetch) {
    const bool keyless = cfg.payload == PayloadKind::Nat;
    fetches[node] = keyless ? nlohmann::json(counts.empty() ? 0 : counts.begin()->second) : nlohmann::json(counts);
  }
  nlohmann::json report{{"seed", cfg.seed}, {"final_fetch", fetches}};
  if (f.check || f.oracle || f.view_compare) {
    report["verdict"] = to_json(v);
  } else {
    report["metrics"] = to_json(v.metrics);
  }
  if (f.view_compare) {
    const auto cmp = compare_view_runs(cfg);
    report["view_runs"] = {{"identical", cmp.identical},
                           {"states_compared", cmp.states_compared},
                           {"first_difference", cmp.first_difference},
                           {"max_downward_slots_with_view", cmp.max_downward_slots_with_view},
                           {"max_downward_slots_without_view", cmp.max_downward_slots_without_view},
                           {"max_message_bytes_with_view", cmp.max_message_bytes_with_view},
                           {"max_message_bytes_without_view", cmp.max_message_bytes_without_view}};
    if (!cmp.identical) report["verdict"]["pass"] = false;
  }
  if (!f.verdict_out.empty()) {
    std::ofstream out(f.verdict_out);
    out << report.dump(2) << '\n';
  }
  std::cout << report.dump(2) << '\n';
  if (f.oracle && v.oracle) {
    std::cerr << "oracle: " << (v.oracle->agree() ? "agree" : "disagree") << '\n';
  }
  const bool failed = (f.check || f.oracle || f.view_compare) && !report["verdict"]["pass"].get<bool>();
  return failed ? kFailure : kOk;
}

int cmd_sweep(const std::string& path, std::uint64_t seeds, std::string summary_out, std::string metrics_out,
              const std::string& mutant) {
  auto cfg = load_checked(path);
  if (auto s = env("HANDOFF_SEED")) cfg.seed = std::stoull(*s);
  if (metrics_out.empty()) metrics_out = env("HANDOFF_METRICS_OUT").value_or("");

  RunOptions opts;
  opts.oracle = true;
  opts.measure_bytes = !metrics_out.empty();
  opts.mutant = mutant_flag(mutant);

  std::ofstream file;
  if (!summary_out.empty()) {
    file.open(summary_out);
    if (!file) throw std::runtime_error("cannot write " + summary_out);
  }
  std::ostream& out = summary_out.empty() ? std::cout : file;
  out << sweep_csv_header() << '\n';

  std::vector<Metrics> metrics;
  std::uint64_t failures = 0;
  const auto base = cfg.seed;
  for (std::uint64_t k = 0; k < seeds; ++k) {
    cfg.seed = base + k;
    const auto result = run_scenario(cfg, opts);
    const auto row = sweep_row(result.verdict);
    out << sweep_csv_row(row) << '\n' << std::flush;
    metrics.push_back(result.verdict.metrics);
    if (!row.pass) {
      ++failures;
      const auto& kept = result.verdict.log.kept();
      std::cerr << "seed " << cfg.seed << " failed";
      if (!kept.empty()) std::cerr << ": " << kept.front().invariant << " at step " << kept.front().step << ": "
                                   << kept.front().detail;
      std::cerr << '\n';
    }
  }
  if (!metrics_out.empty()) write_metrics(metrics_out, metrics);
  std::cerr << seeds - failures << "/" << seeds << " seeds passed\n";
  return failures == 0 ? kOk : kFailure;
}

int cmd_check_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  const auto trace = read_trace(in);
  const auto log = check_fetch_criteria(trace);
  nlohmann::json kept = nlohmann::json::array();
  for (const auto& v : log.kept()) kept.push_back(to_json(v));
  nlohmann::json report{
      {"events", trace.size()},
      {"pass", log.empty()},
      {"invariants",
       {{kFetchBounded, {{"pass", log.count(kFetchBounded) == 0}, {"violations", log.count(kFetchBounded)}}},
        {kLocalMonotonicity,
         {{"pass", log.count(kLocalMonotonicity) == 0}, {"violations", log.count(kLocalMonotonicity)}}}}},
      {"first_violation", kept.empty() ? nlohmann::json(nullptr) : kept.front()},
      {"reported_violations", kept},
      {"note", "Traces carry no node states; only the fetch criteria are checked. Certifies only this finite trace."},
  };
  std::cout << report.dump(2) << '\n';
  return log.empty() ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Handoff counter simulator and checker"};
  app.require_subcommand(1);

  std::string config;
  auto* validate = app.add_subcommand("validate", "Parse a scenario and check its topology");
  validate->add_option("config", config, "Scenario JSON file")->required();

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("config", config, "Scenario JSON file")->required();
  run->add_option("--seed", run_flags.seed, "Override the scenario seed");
  run->add_option("--trace-out", run_flags.trace_out, "Write the trace as JSON lines");
  run->add_option("--metrics-out", run_flags.metrics_out, "Write metrics (.json or CSV)");
  run->add_option("--verdict-out", run_flags.verdict_out, "Write the JSON report");
  run->add_flag("--check", run_flags.check, "Check invariants; exit 1 on any violation");
  run->add_flag("--oracle", run_flags.oracle, "Compare against the G-Counter baseline");
  run->add_flag("--view-compare", run_flags.view_compare, "Compare runs with and without views");
  run->add_option("--mutant", run_flags.mutant, "Use a deliberately broken merge (testing)");

  std::uint64_t seeds = 1;
  std::string summary_out;
  std::string sweep_metrics_out;
  std::string sweep_mutant = "none";
  auto* sweep = app.add_subcommand("sweep", "Run and check consecutive seeds");
  sweep->add_option("config", config, "Scenario JSON file")->required();
  sweep->add_option("--seeds", seeds, "Number of seeds, starting at the scenario seed")->check(CLI::PositiveNumber);
  sweep->add_option("--summary-out", summary_out, "Write the summary CSV here instead of stdout");
  sweep->add_option("--metrics-out", sweep_metrics_out, "Write per-seed metrics (.json or CSV)");
  sweep->add_option("--mutant", sweep_mutant, "Use a deliberately broken merge (testing)");

  std::string trace_path;
  auto* check_trace = app.add_subcommand("check-trace", "Check the fetch criteria on a trace file");
  check_trace->add_option("trace", trace_path, "JSON-lines trace")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(config);
    if (*run) return cmd_run(config, run_flags);
    if (*sweep) return cmd_sweep(config, seeds, summary_out, sweep_metrics_out, sweep_mutant);
    if (*check_trace) return cmd_check_trace(trace_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
