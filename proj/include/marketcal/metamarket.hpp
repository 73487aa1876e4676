#pragma once

// Calibrator K(u, x): an LSTM encodes a window of daily z-scored features
// into u; a state analyzer maps the market state x to the weights of a
// single sigmoid layer that turns u into normalized behavior coordinates.

#include <array>
#include <vector>

#include "marketcal/checkpoint.hpp"
#include "marketcal/features.hpp"
#include "marketcal/market_state.hpp"
#include "marketcal/nn.hpp"
#include "marketcal/rng.hpp"
#include "marketcal/surrogate.hpp"

namespace mcal::meta {

struct MetaConfig {
    std::size_t window = 20;
    std::size_t hidden = 64;
    std::size_t lstm_layers = 2;
    std::vector<std::size_t> analyzer_hidden{200, 100};
    double w_t = 0.1;
    double w_s = 1.0;
    double sigma = 0.1;          // triplet margin
    double similar_noise = 0.05;  // z units
    double dissimilar_noise = 0.5;
    std::size_t chunk = 8;  // consecutive days per update
    std::size_t epochs = 40;
    double lr = 1e-3;
    std::uint64_t seed = 1;

    void validate() const;
};

/// One calibration day: the feature window ending at the day, its state,
/// fundamental and target features (all normalized).
struct DaySample {
    std::size_t day = 0;
    std::vector<features::FeatureArray> window;  // oldest first, last = this day
    state::StateArray x{};
    surrogate::FundNorm f{};
    features::FeatureArray q{};
};

struct StateTriplet {
    state::StateArray anchor{};
    state::StateArray similar{};
    state::StateArray dissimilar{};
};

/// Gaussian fabrication around the anchor, resampled until the similar state
/// is strictly closer than the dissimilar one.
StateTriplet make_triplet(const state::StateArray& x, double similar_sd, double dissimilar_sd, Rng& rng);

class MetaMarket {
public:
    explicit MetaMarket(const MetaConfig& cfg);

    ad::Var encode(ad::Tape& t, const std::vector<features::FeatureArray>& window);
    /// sigmoid(W(x) u + b(x)), normalized behavior coordinates.
    ad::Var estimate(ad::Var u, ad::Var x);
    ad::Var estimate(ad::Tape& t, ad::Var u, const state::StateArray& x);

    /// One-shot calibration; never calls the simulator.
    agents::NormBehavior infer(const std::vector<features::FeatureArray>& window, const state::StateArray& x);

    ad::ParamList extractor_params() { return extractor_.params(); }
    ad::ParamList analyzer_params() { return analyzer_.params(); }
    ad::ParamList params();
    const MetaConfig& config() const { return cfg_; }
    std::size_t theta2_size() const { return agents::kBehaviorDims * cfg_.hidden + agents::kBehaviorDims; }

    // normalizers travel with the checkpoint so the CLI can calibrate raw inputs
    features::FeatureNormalizer feature_norm;
    state::StateNormalizer state_norm;

    void save(ckpt::Archive& a);
    void load(const ckpt::Archive& a);

private:
    MetaConfig cfg_;
    nn::Lstm extractor_;
    nn::Mlp analyzer_;
};

// ---- losses ------------------------------------------------------------

/// ||sur(b, f) - q||^2; the surrogate must be frozen by the caller.
ad::Var loss_repr(ad::Var b, const DaySample& d, surrogate::SurrogateNet& sur);
/// Sum of squared steps between consecutive estimates.
ad::Var loss_temp(const std::vector<ad::Var>& bs);
/// Triplet hinge on Euclidean distances; u is detached so only the analyzer
/// receives gradient.
ad::Var loss_stat(MetaMarket& K, ad::Var u, const StateTriplet& tr, double sigma);

struct EpochLog {
    std::size_t epoch = 0;
    double loss = 0;
    double recon = 0;      // mean surrogate reconstruction error
    double variation = 0;  // mean consecutive-day behavior variation
    double stat = 0;       // mean triplet loss on fixed evaluation triplets
};

struct Evaluation {
    std::vector<agents::NormBehavior> b;
    double recon = 0;
    double variation = 0;
    double stat = 0;
};

Evaluation evaluate(MetaMarket& K, const std::vector<DaySample>& days, surrogate::SurrogateNet& sur,
                    std::uint64_t seed);

/// Adam over chunks of consecutive days minimizing
/// L_repr + w_t L_temp + w_s L_stat (each averaged per day / pair).
/// Log index 0 is the untrained model.
std::vector<EpochLog> train(MetaMarket& K, const std::vector<DaySample>& days,
                            surrogate::SurrogateNet& sur);

/// The composite loss of one chunk, shared by training and gradient checks.
ad::Var chunk_loss(ad::Tape& t, MetaMarket& K, const std::vector<DaySample>& chunk,
                   const std::vector<StateTriplet>& triplets, surrogate::SurrogateNet& sur);

struct Hypothesis {
    agents::NormBehavior factual{};
    agents::NormBehavior counterfactual{};
};

Hypothesis hypothesize(MetaMarket& K, const std::vector<features::FeatureArray>& window,
                       const state::StateArray& x, const state::StateArray& x_modified);

}  // namespace mcal::meta
