#pragma once

// Day-level fan-out. Every kernel has a serial reference path and an OpenMP
// path; both give identical results because each job carries its own seed.

#include <functional>
#include <vector>

#include "marketcal/features.hpp"
#include "marketcal/simulator.hpp"

namespace mcal::batch {

enum class Exec { Serial, Parallel };

struct SimJob {
    sim::SimConfig cfg;
    agents::BehaviorVector b;
    sim::FundamentalSeries fund;
};

/// Calls fn(i) for i in [0, n). The first exception thrown by any call is
/// rethrown after the loop (remaining iterations still run).
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, Exec exec);

std::vector<sim::OrderStream> simulate(const std::vector<SimJob>& jobs, Exec exec,
                                       sim::CallCounter* counter = nullptr);

std::vector<features::FeatureVector> simulate_features(const std::vector<SimJob>& jobs, Exec exec,
                                                       sim::CallCounter* counter = nullptr);

std::vector<features::FeatureVector> extract_all(const std::vector<sim::OrderStream>& streams,
                                                 Exec exec);

/// Worker threads the parallel path will use.
int max_threads();

}  // namespace mcal::batch
