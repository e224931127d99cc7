#include <benchmark/benchmark.h>

#include "handoff/codec.hpp"
#include "handoff/counter.hpp"
#include "handoff/gcounter.hpp"
#include "handoff/scenario.hpp"
#include "handoff/simulator.hpp"

namespace {

using namespace handoff;

// A tier-0 node that has accumulated `n` peers in its vector and holds `n`
// open slots, merged with a client that is handing off.
std::pair<CounterState, CounterState> loaded_pair(std::int64_t n) {
  auto server = init(NodeId("server"), 0);
  for (std::int64_t k = 0; k < n; ++k) {
    server.vals[NodeId("peer" + std::to_string(k))] = static_cast<std::uint64_t>(k);
    server.slots[NodeId("client" + std::to_string(k))] = {0, static_cast<Clock>(k)};
  }
  server.dck = static_cast<Clock>(n);
  auto client = init(NodeId("zclient"), 1);
  for (int k = 0; k < 10; ++k) client = incr(std::move(client));
  return {server, client};
}

void BM_MergeIntoServer(benchmark::State& state) {
  const auto [server, client] = loaded_pair(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(merge(server, client));
}
BENCHMARK(BM_MergeIntoServer)->RangeMultiplier(4)->Range(1, 1024);

void BM_MergeIntoClient(benchmark::State& state) {
  const auto [server, client] = loaded_pair(state.range(0));
  const auto view_of_server = view(merge(server, client), client.id, client.tier);
  for (auto _ : state) benchmark::DoNotOptimize(merge(client, view_of_server));
}
BENCHMARK(BM_MergeIntoClient)->RangeMultiplier(4)->Range(1, 1024);

void BM_GCounterMerge(benchmark::State& state) {
  auto a = gc_init(NodeId("a"));
  auto b = gc_init(NodeId("b"));
  for (std::int64_t k = 0; k < state.range(0); ++k) {
    a.entries[NodeId("n" + std::to_string(k))] = static_cast<std::uint64_t>(k);
    b.entries[NodeId("n" + std::to_string(k))] = static_cast<std::uint64_t>(k + 1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(gc_merge(a, b));
}
BENCHMARK(BM_GCounterMerge)->RangeMultiplier(4)->Range(1, 1024);

void BM_Encode(benchmark::State& state) {
  const auto [server, _] = loaded_pair(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(encode(server));
}
BENCHMARK(BM_Encode)->RangeMultiplier(4)->Range(1, 1024);

void BM_Decode(benchmark::State& state) {
  const auto bytes = encode(loaded_pair(state.range(0)).first);
  for (auto _ : state) benchmark::DoNotOptimize(decode<NatAlgebra>(bytes));
}
BENCHMARK(BM_Decode)->RangeMultiplier(4)->Range(1, 1024);

void BM_SimulateDatacenters(benchmark::State& state) {
  auto cfg = load_scenario(std::string(HANDOFF_SCENARIO_DIR) + "/datacenters.json");
  cfg.steps = static_cast<std::uint64_t>(state.range(0));
  typename Simulation<NatAlgebra>::Options o;
  o.keep_trace = false;
  o.measure_bytes = false;
  for (auto _ : state) {
    Simulation<NatAlgebra> sim(cfg, o);
    sim.run();
    benchmark::DoNotOptimize(sim.step());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateDatacenters)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
