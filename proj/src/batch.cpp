#include "marketcal/batch.hpp"

#include <exception>
#include <mutex>
#include <omp.h>

namespace mcal::batch {

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, Exec exec) {
    std::exception_ptr first;
    if (exec == Exec::Serial) {
        // same contract as the parallel path: finish the loop, then rethrow
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                if (!first) first = std::current_exception();
            }
        }
        if (first) std::rethrow_exception(first);
        return;
    }
    std::mutex mu;
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (!first) first = std::current_exception();
        }
    }
    if (first) std::rethrow_exception(first);
}

std::vector<sim::OrderStream> simulate(const std::vector<SimJob>& jobs, Exec exec,
                                       sim::CallCounter* counter) {
    std::vector<sim::OrderStream> out(jobs.size());
    for_each_index(
        jobs.size(), [&](std::size_t i) { out[i] = sim::run_day(jobs[i].cfg, jobs[i].b, jobs[i].fund, counter); },
        exec);
    return out;
}

std::vector<features::FeatureVector> simulate_features(const std::vector<SimJob>& jobs, Exec exec,
                                                       sim::CallCounter* counter) {
    std::vector<features::FeatureVector> out(jobs.size());
    for_each_index(
        jobs.size(),
        [&](std::size_t i) {
            out[i] = features::extract(sim::run_day(jobs[i].cfg, jobs[i].b, jobs[i].fund, counter));
        },
        exec);
    return out;
}

std::vector<features::FeatureVector> extract_all(const std::vector<sim::OrderStream>& streams,
                                                 Exec exec) {
    std::vector<features::FeatureVector> out(streams.size());
    for_each_index(streams.size(), [&](std::size_t i) { out[i] = features::extract(streams[i]); }, exec);
    return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace mcal::batch
