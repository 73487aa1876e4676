#include "marketcal/baselines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "marketcal/rng.hpp"

namespace mcal::baselines {

namespace {

Point uniform_point(Rng& rng) {
    Point p{};
    for (auto& v : p) v = uniform01(rng);
    return p;
}

double sq_dist(const Point& a, const Point& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

void absorb(SearchResult& r, const std::vector<Point>& pts, const std::vector<double>& s) {
    if (s.size() != pts.size()) throw std::runtime_error("scorer returned the wrong number of scores");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        // strict < keeps the earliest of tied candidates
        if (r.tried.empty() || s[i] < r.best_score) {
            r.best = pts[i];
            r.best_score = s[i];
        }
        r.tried.push_back(pts[i]);
        r.scores.push_back(s[i]);
    }
}

std::vector<double> default_grid() {
    std::vector<double> g;
    const double lo = std::log(0.03), hi = std::log(3.0);
    for (int i = 0; i < 24; ++i) g.push_back(std::exp(lo + (hi - lo) * i / 23.0));
    return g;
}

}  // namespace

SearchResult random_search(const BatchScorer& score, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("trials must be at least 1");
    Rng rng(derive_seed(seed, "randsearch"));
    std::vector<Point> pts;
    for (std::size_t i = 0; i < trials; ++i) pts.push_back(uniform_point(rng));
    SearchResult r;
    absorb(r, pts, score(pts));
    return r;
}

void BayesConfig::validate() const {
    if (trials == 0) throw std::invalid_argument("bayesopt.trials must be at least 1");
    if (warm_start == 0) throw std::invalid_argument("bayesopt.warm_start must be at least 1");
    if (candidates == 0) throw std::invalid_argument("bayesopt.candidates must be at least 1");
    if (!(noise > 0)) throw std::invalid_argument("bayesopt.noise must be positive");
    for (double l : length_grid)
        if (!(l > 0)) throw std::invalid_argument("bayesopt.length_grid entries must be positive");
}

GaussianProcess::GaussianProcess(std::vector<Point> x, std::vector<double> y, double length_scale, double noise)
    : x_(std::move(x)), ell_(length_scale) {
    const std::size_t n = x_.size();
    if (n == 0 || y.size() != n) throw std::invalid_argument("GP needs matching, non-empty x and y");
    y_mean_ = 0;
    for (double v : y) y_mean_ += v;
    y_mean_ /= static_cast<double>(n);
    double var = 0;
    for (double v : y) var += (v - y_mean_) * (v - y_mean_);
    y_sd_ = n > 1 ? std::sqrt(var / static_cast<double>(n)) : 1.0;
    if (!(y_sd_ > 1e-12)) y_sd_ = 1.0;

    Eigen::VectorXd ys(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) ys[static_cast<Eigen::Index>(i)] = (y[i] - y_mean_) / y_sd_;

    Eigen::MatrixXd K(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::exp(-0.5 * sq_dist(x_[i], x_[j]) / (ell_ * ell_));

    // jitter escalation: start from the nominal noise, grow tenfold per failure
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = noise;
    for (int attempt = 0;; ++attempt) {
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        llt.compute(Kj);
        if (llt.info() == Eigen::Success) break;
        if (attempt >= 8) throw std::runtime_error("GP kernel matrix is not positive definite after jitter escalation");
        jitter *= 10.0;
    }
    jitter_ = jitter;
    const Eigen::VectorXd alpha = llt.solve(ys);
    const Eigen::MatrixXd L = llt.matrixL();
    alpha_.assign(alpha.data(), alpha.data() + alpha.size());
    chol_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            chol_[i * n + j] = L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    double logdet = 0;
    for (std::size_t i = 0; i < n; ++i) logdet += std::log(chol_[i * n + i]);
    lml_ = -0.5 * ys.dot(alpha) - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GaussianProcess::Prediction GaussianProcess::predict(const Point& p) const {
    const std::size_t n = x_.size();
    Eigen::VectorXd k(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        k[static_cast<Eigen::Index>(i)] = std::exp(-0.5 * sq_dist(p, x_[i]) / (ell_ * ell_));
    const Eigen::Map<const Eigen::VectorXd> a(alpha_.data(), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> L(
        chol_.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(k);
    Prediction out;
    out.mean = y_mean_ + y_sd_ * k.dot(a);
    out.var = std::max(0.0, 1.0 - v.squaredNorm()) * y_sd_ * y_sd_;
    return out;
}

GaussianProcess GaussianProcess::fit(const std::vector<Point>& x, const std::vector<double>& y,
                                     const std::vector<double>& grid, double noise) {
    const std::vector<double> g = grid.empty() ? default_grid() : grid;
    std::optional<GaussianProcess> best;
    for (double ell : g) {
        GaussianProcess gp(x, y, ell, noise);
        if (!best || gp.log_marginal_likelihood() > best->log_marginal_likelihood()) best = std::move(gp);
    }
    return std::move(*best);
}

double expected_improvement(double mean, double var, double best) {
    const double imp = best - mean;
    if (!(var > 0)) return std::max(imp, 0.0);
    const double sd = std::sqrt(var);
    const double z = imp / sd;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return std::max(0.0, imp * cdf + sd * pdf);
}

SearchResult bayes_opt(const BatchScorer& score, const BayesConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(derive_seed(seed, "bayesopt"));
    SearchResult r;
    const std::size_t warm = std::min(cfg.warm_start, cfg.trials);
    std::vector<Point> init;
    for (std::size_t i = 0; i < warm; ++i) init.push_back(uniform_point(rng));
    absorb(r, init, score(init));

    while (r.tried.size() < cfg.trials) {
        const GaussianProcess gp = GaussianProcess::fit(r.tried, r.scores, cfg.length_grid, cfg.noise);
        Point pick = uniform_point(rng);
        double best_ei = -1;
        for (std::size_t c = 0; c < cfg.candidates; ++c) {
            const Point p = c == 0 ? pick : uniform_point(rng);
            const auto pr = gp.predict(p);
            const double ei = expected_improvement(pr.mean, pr.var, r.best_score);
            if (ei > best_ei) {
                best_ei = ei;
                pick = p;
            }
        }
        absorb(r, {pick}, score({pick}));
    }
    return r;
}

BatchScorer simulator_scorer(const DayTarget& t, const features::FeatureNormalizer& norm, batch::Exec exec,
                             sim::CallCounter* counter) {
    return [t, norm, exec, counter](const std::vector<Point>& pts) {
        std::vector<batch::SimJob> jobs;
        for (const auto& p : pts) jobs.push_back({t.cfg, agents::BehaviorVector::from_normalized(p), t.fund});
        const auto fs = batch::simulate_features(jobs, exec, counter);
        const auto zt = norm.normalize(t.target);
        std::vector<double> out;
        for (const auto& f : fs) out.push_back(features::reconstruction_error_z(norm.normalize(f.to_array()), zt));
        return out;
    };
}

}  // namespace mcal::baselines
