#pragma once

// Stylized-fact extractor: 13 statistics of one day's order stream, the
// z-score normalizer, and the reconstruction-error / behavior-variation
// metrics built on them.

#include <array>
#include <span>
#include <vector>

#include "marketcal/agents.hpp"
#include "marketcal/simulator.hpp"

namespace mcal::features {

inline constexpr std::size_t kFeatureDims = 13;
using FeatureArray = std::array<double, kFeatureDims>;

const std::array<const char*, kFeatureDims>& feature_names();

struct FeatureVector {
    // minutely mid returns
    double gain_loss_ratio = 0;
    double kurtosis = 0;
    double zero_return_ratio = 0;
    // corr(r_t^2, r_{t+n}^2)
    double vc_1 = 0;
    double vc_2 = 0;
    double vc_3 = 0;
    double vc_mean10 = 0;
    // limit orders of at most 100 lots
    double size_le_1 = 0;
    double size_le_5 = 0;
    double size_le_10 = 0;
    double size_le_50 = 0;
    // limit orders within 10 ticks of the mid at placement
    double px_within_1 = 0;
    double px_within_5 = 0;

    FeatureArray to_array() const;
    static FeatureVector from_array(const FeatureArray& a);
    bool operator==(const FeatureVector&) const = default;
};

/// r_t = ln(P_t / P_{t-1}). Needs two or more strictly positive prices.
std::vector<double> returns(std::span<const double> prices);

/// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Excess (Fisher) kurtosis; 0 for a zero-variance sample.
double excess_kurtosis(std::span<const double> x);

/// corr(r_t^2, r_{t+lag}^2); 0 when the overlap is shorter than two points.
double volatility_clustering(std::span<const double> r, std::size_t lag);

/// Minimal per-order record the order-level features are computed from.
struct PlacedOrder {
    lob::Lots size = 0;
    double distance_ticks = 0;  // |price - mid| at placement
};

/// Return-distribution and volatility-clustering fields from minute mids.
void fill_return_features(std::span<const double> mid_per_minute, FeatureVector& f);

/// Order-size and order-price fields from placed limit orders.
void fill_order_features(std::span<const PlacedOrder> orders, FeatureVector& f);

FeatureVector extract(const sim::OrderStream& s);

class FeatureNormalizer {
public:
    FeatureNormalizer() { stats_.std.fill(1.0); }

    static constexpr double kStdFloor = 1e-9;

    void fit(std::span<const FeatureArray> corpus);
    FeatureArray normalize(const FeatureArray& x) const;
    FeatureArray denormalize(const FeatureArray& z) const;

    const FeatureArray& mean() const { return stats_.mean; }
    const FeatureArray& std() const { return stats_.std; }
    void set(const FeatureArray& mean, const FeatureArray& sd);
    bool fitted() const { return fitted_; }

private:
    struct {
        FeatureArray mean{};
        FeatureArray std{};
    } stats_;
    bool fitted_ = false;
};

/// Squared L2 distance of the two vectors in z-space.
double reconstruction_error(const FeatureVector& f_hat, const FeatureVector& f_target,
                            const FeatureNormalizer& norm);
double reconstruction_error_z(const FeatureArray& z_hat, const FeatureArray& z_target);

/// Squared L2 distance between the [0,1]-normalized coordinate vectors.
double behavior_variation(const agents::BehaviorVector& a, const agents::BehaviorVector& b);
double behavior_variation(const agents::NormBehavior& a, const agents::NormBehavior& b);

}  // namespace mcal::features
