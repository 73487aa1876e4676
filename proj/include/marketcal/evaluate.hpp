#pragma once

// Market-replay evaluation of per-day calibrations: every method's behavior
// is re-simulated on each evaluation day with one shared seed per day, so
// methods differ only in the behavior they chose.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "marketcal/batch.hpp"
#include "marketcal/benchmark.hpp"

namespace mcal::eval {

/// One method's per-day output, as stored in the calibration CSV.
struct Calibration {
    std::string method;  // calisim, calisim_ws0, randsearch, bayesopt, ground_truth
    std::string source;  // source column
    std::vector<std::size_t> days;
    std::vector<agents::NormBehavior> b;
    std::uint64_t simulator_calls = 0;

    void write_csv(const std::filesystem::path& p) const;
    static Calibration read_csv(const std::filesystem::path& p, const std::string& method);
};

struct MethodReport {
    std::string method;
    std::vector<double> recon;      // per day
    std::vector<double> variation;  // per consecutive pair
    std::vector<double> fidelity;   // ||b - b*||^2 per day
    std::uint64_t simulator_calls = 0;

    double mean_recon() const;
    double median_variation() const;
    double mean_fidelity() const;
};

struct Report {
    std::vector<std::size_t> days;
    std::map<std::string, MethodReport> methods;
    // rho[method][indicator][param] over the evaluation days
    std::map<std::string, std::array<std::array<double, agents::kBehaviorDims>, state::kStateDims>> rho;
    std::vector<std::string> absent;  // expected methods with no calibration

    double mean_abs_rho(const std::string& method, std::size_t indicator) const;
    const MethodReport* find(const std::string& method) const;
};

/// Replay seed shared by all methods on `day`.
std::uint64_t replay_seed(std::uint64_t seed, std::size_t day);

Report evaluate(const bench::Benchmark& b, const std::vector<Calibration>& cals,
                const features::FeatureNormalizer& norm, std::uint64_t seed, batch::Exec exec,
                const std::vector<std::string>& expected = {});

/// CSV tables plus matplotlib scripts that plot them.
void write_report(const std::filesystem::path& dir, const Report& r);

}  // namespace mcal::eval
