#pragma once

// Learned stand-in for the simulator: (normalized behavior, normalized
// fundamental) -> z-scored feature vector.

#include <array>
#include <filesystem>
#include <vector>

#include "marketcal/batch.hpp"
#include "marketcal/checkpoint.hpp"
#include "marketcal/features.hpp"
#include "marketcal/nn.hpp"

namespace mcal::surrogate {

inline constexpr std::size_t kFundDims = sim::kFundamentalPoints;
using FundNorm = std::array<double, kFundDims>;

/// ln(P_k / P_open) per fundamental sample.
FundNorm normalize_fundamental(const sim::FundamentalSeries& f, double open_price);

struct Row {
    std::size_t day = 0;
    std::size_t draw = 0;
    agents::NormBehavior b{};
    FundNorm f{};
    features::FeatureArray q{};  // raw features
    bool validation = false;
};

struct Dataset {
    std::vector<Row> rows;
    features::FeatureNormalizer norm;  // fitted on training rows only

    std::size_t count(bool validation) const;
};

struct DayInput {
    std::size_t day = 0;
    sim::SimConfig cfg;  // open price etc.; rng_seed is replaced per draw
    sim::FundamentalSeries fund;
};

/// Seeded whole-day split: the returned flags mark validation days.
std::vector<bool> split_days(std::size_t n_days, double val_fraction, std::uint64_t seed);

/// `per_day` uniform behavior draws per day, each simulated and extracted.
Dataset build_dataset(const std::vector<DayInput>& days, std::size_t per_day, double val_fraction,
                      std::uint64_t seed, batch::Exec exec, sim::CallCounter* counter = nullptr);

void write_dataset_csv(const std::filesystem::path& p, const Dataset& ds);

class SurrogateNet {
public:
    explicit SurrogateNet(std::uint64_t seed = 1);

    /// Differentiable forward pass in z-space.
    ad::Var forward(ad::Var b, ad::Var f);
    /// Plain evaluation; b outside [0,1] is clamped with a warning.
    features::FeatureArray predict(const agents::NormBehavior& b, const FundNorm& f);

    ad::ParamList params();
    void set_trainable(bool on);
    features::FeatureNormalizer& normalizer() { return norm_; }
    const features::FeatureNormalizer& normalizer() const { return norm_; }

    void save(ckpt::Archive& a) const;
    void load(const ckpt::Archive& a);

private:
    nn::Mlp fund_;
    nn::Mlp trunk_;
    features::FeatureNormalizer norm_;
};

struct TrainOptions {
    std::size_t epochs = 200;
    double lr = 1e-3;
    std::size_t batch = 16;
    std::uint64_t seed = 1;
};

struct TrainCurves {
    std::vector<double> train;  // index 0 = before any update
    std::vector<double> val;
    std::size_t best_epoch = 0;
    double best_val = 0;
    double const_mean_val = 0;  // validation loss of predicting the training mean
};

/// Mean squared z-space error per row, minimized with Adam. On return the
/// net holds the best-validation weights and the dataset's normalizer.
TrainCurves train(SurrogateNet& net, const Dataset& ds, const TrainOptions& opt);

double mean_loss(SurrogateNet& net, const Dataset& ds, bool validation);

}  // namespace mcal::surrogate
