// Serial reference kernel vs the OpenMP kernel on the sWTA network.

#include <map>

#include <benchmark/benchmark.h>

#include "ncsim/engine.hpp"
#include "ncsim/network.hpp"
#include "ncsim/rng.hpp"
#include "ncsim/spike_trains.hpp"

using namespace ncsim;

namespace {

struct Setup {
    network::NetworkSpec net;
    std::vector<engine::Stimulus> stim;
};

const Setup& setup(std::uint32_t n_exc)
{
    static std::map<std::uint32_t, Setup> cache;
    auto it = cache.find(n_exc);
    if (it != cache.end()) return it->second;
    Setup s;
    s.net = network::build_swta(n_exc, 4, 0.78, 0.74, 0.7, 0.8, 0.8);
    engine::Stimulus st{"drive", "exc", "input", {}};
    for (std::uint32_t i = 0; i < n_exc; ++i)
        st.channels.push_back({i, 0.72, engine::poisson_train(150.0, 0.0, 0.2, rng::derive_seed(1, "bench", i))});
    s.stim.push_back(std::move(st));
    return cache.emplace(n_exc, std::move(s)).first->second;
}

void run(benchmark::State& state, engine::KernelKind kind, int threads)
{
    const auto& s = setup(static_cast<std::uint32_t>(state.range(0)));
    engine::SimConfig cfg;
    cfg.t_end = 0.2;
    cfg.kernel = kind;
    cfg.threads = threads;
    std::size_t spikes = 0;
    for (auto _ : state) {
        engine::Simulator sim(s.net, cfg, s.stim);
        sim.run();
        spikes = sim.record().spikes.size();
        benchmark::DoNotOptimize(spikes);
    }
    state.counters["spikes"] = static_cast<double>(spikes);
    state.counters["steps/s"] = benchmark::Counter(cfg.t_end / cfg.dt, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_Serial(benchmark::State& st) { run(st, engine::KernelKind::Serial, 1); }
void BM_Parallel(benchmark::State& st) { run(st, engine::KernelKind::Parallel, engine::resolve_threads(0)); }

}  // namespace

BENCHMARK(BM_Serial)->Arg(124)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Parallel)->Arg(124)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
