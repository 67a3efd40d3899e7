#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mgsim/consensus.hpp"
#include "mgsim/episode_runner.hpp"
#include "mgsim/netsim.hpp"
#include "mgsim/scenario.hpp"
#include "mgsim/topology.hpp"

using namespace mgsim;

namespace {

std::vector<std::vector<bool>> ring_adjacency(int n) {
    std::vector<std::vector<bool>> adjacency(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) {
        adjacency[i][i] = true;
        adjacency[i][(i + 1) % n] = true;
        adjacency[(i + 1) % n][i] = true;
    }
    return adjacency;
}

void BM_MetropolisWeights(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto graph = topology::CommGraph::build(ring_adjacency(n));
    for (auto _ : state) {
        benchmark::DoNotOptimize(topology::metropolis_weights(graph));
    }
}
BENCHMARK(BM_MetropolisWeights)->Arg(5)->Arg(32)->Arg(128);

void BM_EpisodeSync(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto graph = topology::CommGraph::build(ring_adjacency(n));
    auto weights = topology::metropolis_weights(graph);
    std::vector<double> x(n);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    for (double& v : x) v = value(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(consensus::run_episode_sync(x, weights, 50));
    }
}
BENCHMARK(BM_EpisodeSync)->Arg(5)->Arg(32);

void BM_MessageDrivenEpisode(benchmark::State& state) {
    auto graph = topology::CommGraph::build(ring_adjacency(5));
    auto weights = topology::metropolis_weights(graph);
    const std::vector<double> x{1, 2, 3, 4, 5};
    scenario::NetworkEpisodeRunner runner(graph, weights, netsim::QosConfig{}, 1, 50);
    for (auto _ : state) {
        benchmark::DoNotOptimize(runner.run(x));
    }
}
BENCHMARK(BM_MessageDrivenEpisode);

void BM_CodecRoundTrip(benchmark::State& state) {
    netsim::Envelope env{0, 123456, consensus::Message{3, 42, 0.0121463}};
    for (auto _ : state) {
        auto frame = netsim::encode_frame(env);
        benchmark::DoNotOptimize(netsim::decode_frame(frame));
    }
}
BENCHMARK(BM_CodecRoundTrip);

void BM_SimulatedSecond(benchmark::State& state) {
    scenario::Scenario s;
    s.duration = 1.0;
    s.schedule.steps = {{0.5, 200.0}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(scenario::run_simulation(s));
    }
}
BENCHMARK(BM_SimulatedSecond);

} // namespace

BENCHMARK_MAIN();
