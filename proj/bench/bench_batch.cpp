// Day-level fan-out: serial reference vs OpenMP path on CI-sized days.

#include <benchmark/benchmark.h>

#include "marketcal/batch.hpp"
#include "marketcal/rng.hpp"

namespace {

std::vector<mcal::batch::SimJob> jobs(std::size_t n) {
    std::vector<mcal::batch::SimJob> out;
    mcal::Rng rng(7);
    for (std::size_t i = 0; i < n; ++i) {
        mcal::batch::SimJob j;
        j.cfg.n_agents = 100;
        j.cfg.slots_per_day = 3600;
        j.cfg.rng_seed = mcal::derive_seed(7, "bench", i);
        mcal::agents::NormBehavior b{};
        for (auto& v : b) v = mcal::uniform01(rng);
        j.b = mcal::agents::BehaviorVector::from_normalized(b);
        j.fund = mcal::sim::FundamentalSeries::flat(10.0);
        out.push_back(j);
    }
    return out;
}

void run(benchmark::State& state, mcal::batch::Exec exec) {
    const auto js = jobs(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto f = mcal::batch::simulate_features(js, exec);
        benchmark::DoNotOptimize(f.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = exec == mcal::batch::Exec::Parallel ? mcal::batch::max_threads() : 1;
}

void BM_SimulateSerial(benchmark::State& s) { run(s, mcal::batch::Exec::Serial); }
void BM_SimulateParallel(benchmark::State& s) { run(s, mcal::batch::Exec::Parallel); }

}  // namespace

BENCHMARK(BM_SimulateSerial)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SimulateParallel)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
