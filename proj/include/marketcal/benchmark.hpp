#pragma once

// Synthetic ground-truth benchmark. Each day's behavior b*_t drifts smoothly
// toward 0.5 + A z_t, where z_t is the day's market state in z units, and the
// day's target stream is simulated from b*_t. Days are generated in order:
// the trend and noise indicators of day t come from the bars of the target
// streams already generated for the 20 preceding days.

#include <array>
#include <filesystem>
#include <vector>

#include "marketcal/config.hpp"
#include "marketcal/features.hpp"
#include "marketcal/market_state.hpp"
#include "marketcal/simulator.hpp"

namespace mcal::bench {

enum class Split { Warmup, Train, Test };
const char* to_string(Split s);
Split split_from_string(const std::string& s);

using StateMap = std::array<std::array<double, state::kStateDims>, agents::kBehaviorDims>;

/// Rows (delta_f, delta_c, delta_n, tau, p_inst) over columns
/// (cpi, ppi, pmi, trend, noise); each row has Euclidean norm `gain`.
StateMap planted_map(double gain);

struct DayRecord {
    std::size_t day = 0;
    Split split = Split::Warmup;
    agents::NormBehavior b_star{};
    state::StateArray planted_z{};  // state the generator used, z units
    lob::Ticks open_ticks = 0;
    std::uint64_t sim_seed = 0;
    sim::FundamentalSeries fund;
    features::FeatureArray q{};  // raw target features
    state::DailyBar bar;         // currency
};

struct Benchmark {
    config::BenchmarkConfig cfg;
    sim::SimConfig sim;  // shared simulator settings (open and seed vary per day)
    StateMap A{};
    state::MacroTable macro;
    state::Calendar calendar;
    std::vector<DayRecord> days;

    std::vector<std::size_t> days_in(Split s) const;
    /// Simulator settings that reproduce the target stream of `day`.
    sim::SimConfig day_config(std::size_t day) const;
    /// Raw state of `day` from macro and the 20 preceding bars.
    state::StateArray raw_state(std::size_t day) const;
};

/// Deterministic in cfg.seed. Streams are returned through `streams` when given.
Benchmark generate(const config::Config& cfg, sim::CallCounter* counter = nullptr,
                   std::vector<sim::OrderStream>* streams = nullptr);

/// max_t ||b*_t - b*_{t+1}||^2 over consecutive days.
double max_step(const Benchmark& b);

void save(const std::filesystem::path& dir, const Benchmark& b);
Benchmark load(const std::filesystem::path& dir);

}  // namespace mcal::bench
