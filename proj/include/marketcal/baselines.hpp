#pragma once

// Search-based calibrators: per-day random search and GP Bayesian
// optimization in normalized behavior space.

#include <functional>
#include <vector>

#include "marketcal/agents.hpp"
#include "marketcal/batch.hpp"
#include "marketcal/features.hpp"
#include "marketcal/surrogate.hpp"

namespace mcal::baselines {

using Point = agents::NormBehavior;

/// Scores a batch of candidates (lower is better). Called with every
/// candidate the search evaluates, so its call count is the search cost.
using BatchScorer = std::function<std::vector<double>(const std::vector<Point>&)>;

struct SearchResult {
    Point best{};
    double best_score = 0;
    std::vector<Point> tried;
    std::vector<double> scores;
};

SearchResult random_search(const BatchScorer& score, std::size_t trials, std::uint64_t seed);

struct BayesConfig {
    std::size_t trials = 10;
    std::size_t warm_start = 3;
    std::size_t candidates = 1024;
    double noise = 1e-6;
    std::vector<double> length_grid;  // empty = 24 log-spaced values in [0.03, 3]

    void validate() const;
};

SearchResult bayes_opt(const BatchScorer& score, const BayesConfig& cfg, std::uint64_t seed);

/// Zero-mean GP with a squared-exponential kernel on standardized targets.
class GaussianProcess {
public:
    GaussianProcess(std::vector<Point> x, std::vector<double> y, double length_scale, double noise);

    struct Prediction {
        double mean = 0;
        double var = 0;
    };
    Prediction predict(const Point& p) const;
    double log_marginal_likelihood() const { return lml_; }
    double length_scale() const { return ell_; }
    double jitter() const { return jitter_; }

    /// Maximum-marginal-likelihood fit over a grid of length scales.
    static GaussianProcess fit(const std::vector<Point>& x, const std::vector<double>& y,
                               const std::vector<double>& grid, double noise);

private:
    std::vector<Point> x_;
    double y_mean_ = 0;
    double y_sd_ = 1;
    double ell_ = 1;
    double jitter_ = 0;
    double lml_ = 0;
    std::vector<double> alpha_;
    std::vector<double> chol_;  // lower factor, row-major n x n
};

/// Expected improvement for minimization; reduces to max(best - mean, 0) at
/// zero variance.
double expected_improvement(double mean, double var, double best);

/// Scores candidates by simulating them on one day and measuring z-space
/// reconstruction error against the day's target features. All candidates of
/// a day share the same simulation seed.
struct DayTarget {
    std::size_t day = 0;
    sim::SimConfig cfg;  // rng_seed is the per-day search seed
    sim::FundamentalSeries fund;
    features::FeatureArray target{};  // raw features
};

BatchScorer simulator_scorer(const DayTarget& t, const features::FeatureNormalizer& norm, batch::Exec exec,
                             sim::CallCounter* counter);

}  // namespace mcal::baselines
