#pragma once

// Stage runners shared by the CLI and the acceptance suite. Each stage reads
// its inputs from and writes its outputs under one output root, plus a JSON
// manifest under <root>/manifests.
//
//   benchmark/   days.csv macro.csv states.csv benchmark.json
//   surrogate/   dataset.csv curves.csv surrogate.ckpt
//   meta/        <arm>.ckpt <arm>_curves.csv
//   calibration/ <method>_<split>.csv
//   eval/        report tables and plot scripts

#include <filesystem>
#include <optional>
#include <string>

#include "marketcal/benchmark.hpp"
#include "marketcal/config.hpp"
#include "marketcal/evaluate.hpp"
#include "marketcal/metamarket.hpp"
#include "marketcal/surrogate.hpp"

namespace mcal::pipeline {

namespace fs = std::filesystem;

/// --out wins, then MARKETCAL_OUT, then ./out.
fs::path output_root(const std::optional<fs::path>& cli_value);

enum class Method { CaliSim, RandSearch, BayesOpt, GroundTruth };
const char* to_string(Method m);
Method method_from_string(const std::string& s);

/// "main" uses the configured loss weights; "ws0" drops the state term.
enum class Arm { Main, NoState };
const char* to_string(Arm a);

struct Options {
    batch::Exec exec = batch::Exec::Parallel;
    bool write_streams = false;  // persist target order streams with the benchmark
};

bench::Benchmark gen_benchmark(const config::Config& cfg, const fs::path& root, const Options& opt = {});

surrogate::TrainCurves train_surrogate(const config::Config& cfg, const fs::path& root, const Options& opt = {});

std::vector<meta::EpochLog> train_metamarket(const config::Config& cfg, const fs::path& root, Arm arm = Arm::Main);

eval::Calibration calibrate(const config::Config& cfg, const fs::path& root, Method m, bench::Split split,
                            const Options& opt = {}, Arm arm = Arm::Main);

/// Needs at least the calisim calibration of the split; other methods are
/// reported absent when missing.
eval::Report evaluate(const config::Config& cfg, const fs::path& root, bench::Split split, const Options& opt = {});

/// Factual and counterfactual behavior of `day`; `dz` is added to the day's
/// z-scored state.
meta::Hypothesis hypothesize(const config::Config& cfg, const fs::path& root, std::size_t day,
                             const state::StateArray& dz, Arm arm = Arm::Main);

// ---- shared helpers --------------------------------------------------------

surrogate::SurrogateNet load_surrogate(const fs::path& root);
meta::MetaMarket load_metamarket(const config::Config& cfg, const fs::path& root, Arm arm);

/// Calibrator inputs for `days`; each needs `window - 1` earlier days.
std::vector<meta::DaySample> day_samples(const bench::Benchmark& b, const std::vector<std::size_t>& days,
                                         const meta::MetaMarket& K, const features::FeatureNormalizer& target_norm);

/// Runs every stage for one config; returns the test-split report.
eval::Report run_all(const config::Config& cfg, const fs::path& root, const Options& opt = {});

}  // namespace mcal::pipeline
