#pragma once

// Run configuration. A config file is JSON: an optional "profile" ("ci" or
// "full") picks the base values, and the sections simulator, bounds,
// network, training, benchmark and search override individual fields.
// Unknown keys are errors.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "marketcal/baselines.hpp"
#include "marketcal/metamarket.hpp"
#include "marketcal/simulator.hpp"
#include "marketcal/surrogate.hpp"

namespace mcal::config {

/// Invalid or unknown configuration field; the message names it.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BenchmarkConfig {
    std::size_t warmup_days = 40;
    std::size_t train_days = 60;
    std::size_t test_days = 20;
    int days_per_month = 5;
    int start_year = 2020;
    int start_month = 1;
    double persistence = 0.9;  // weight of yesterday's behavior
    double state_gain = 0.12;  // row norm of the state -> behavior map
    bool state_free = false;   // control: map set to zero
    double step_sd = 0.02;
    double clip_lo = 0.05;
    double clip_hi = 0.95;
    double max_step = 0.1;  // squared normalized step bound between days
    double fund_step_sd = 0.002;
    double macro_rho = 0.8;

    std::size_t total_days() const { return warmup_days + train_days + test_days; }
};

struct SurrogateSection {
    std::size_t per_day = 5;
    double val_fraction = 0.2;
    surrogate::TrainOptions train;
};

struct SearchSection {
    std::size_t trials = 10;
    baselines::BayesConfig bayes;
};

struct Config {
    std::string profile = "ci";
    std::uint64_t seed = 1;
    sim::SimConfig sim;
    agents::BehaviorBounds bounds;
    BenchmarkConfig bench;
    SurrogateSection surrogate;
    meta::MetaConfig meta;
    SearchSection search;

    /// Throws ConfigError naming the first bad field.
    void validate() const;
    std::string to_json() const;

    static Config profile_defaults(const std::string& name);
    static Config from_json(const std::string& text, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& p);

    /// Reseeds every component from `seed`.
    void set_seed(std::uint64_t s);
};

}  // namespace mcal::config
