#include "marketcal/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcal::features {

const std::array<const char*, kFeatureDims>& feature_names() {
    static const std::array<const char*, kFeatureDims> names{
        "gain_loss_ratio", "kurtosis",   "zero_return_ratio", "vc_1",       "vc_2",
        "vc_3",            "vc_mean10",  "size_le_1",         "size_le_5",  "size_le_10",
        "size_le_50",      "px_within_1", "px_within_5"};
    return names;
}

FeatureArray FeatureVector::to_array() const {
    return {gain_loss_ratio, kurtosis,   zero_return_ratio, vc_1,       vc_2,
            vc_3,            vc_mean10,  size_le_1,         size_le_5,  size_le_10,
            size_le_50,      px_within_1, px_within_5};
}

FeatureVector FeatureVector::from_array(const FeatureArray& a) {
    FeatureVector f;
    f.gain_loss_ratio = a[0];
    f.kurtosis = a[1];
    f.zero_return_ratio = a[2];
    f.vc_1 = a[3];
    f.vc_2 = a[4];
    f.vc_3 = a[5];
    f.vc_mean10 = a[6];
    f.size_le_1 = a[7];
    f.size_le_5 = a[8];
    f.size_le_10 = a[9];
    f.size_le_50 = a[10];
    f.px_within_1 = a[11];
    f.px_within_5 = a[12];
    return f;
}

std::vector<double> returns(std::span<const double> prices) {
    if (prices.size() < 2) throw std::invalid_argument("returns need at least two prices");
    std::vector<double> r;
    r.reserve(prices.size() - 1);
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0)) throw std::invalid_argument("returns need strictly positive prices");
        if (i > 0) r.push_back(std::log(prices[i] / prices[i - 1]));
    }
    return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double excess_kurtosis(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double n = static_cast<double>(x.size());
    double mean = 0;
    for (double v : x) mean += v;
    mean /= n;
    double m2 = 0, m4 = 0;
    for (double v : x) {
        const double d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if (m2 <= 0.0) return 0.0;
    return m4 / (m2 * m2) - 3.0;
}

double volatility_clustering(std::span<const double> r, std::size_t lag) {
    if (r.size() < lag + 2) return 0.0;
    std::vector<double> sq(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) sq[i] = r[i] * r[i];
    const std::size_t n = sq.size() - lag;
    return pearson(std::span(sq).first(n), std::span(sq).subspan(lag, n));
}

void fill_return_features(std::span<const double> mid_per_minute, FeatureVector& f) {
    const std::vector<double> r = returns(mid_per_minute);
    std::size_t up = 0, down = 0, zero = 0;
    for (double x : r) {
        if (x > 0)
            ++up;
        else if (x < 0)
            ++down;
        else
            ++zero;
    }
    f.gain_loss_ratio = static_cast<double>(up) / static_cast<double>(std::max<std::size_t>(down, 1));
    f.kurtosis = excess_kurtosis(r);
    f.zero_return_ratio = static_cast<double>(zero) / static_cast<double>(r.size());
    f.vc_1 = volatility_clustering(r, 1);
    f.vc_2 = volatility_clustering(r, 2);
    f.vc_3 = volatility_clustering(r, 3);
    double acc = 0;
    for (std::size_t n = 1; n <= 10; ++n) acc += volatility_clustering(r, n);
    f.vc_mean10 = acc / 10.0;
}

void fill_order_features(std::span<const PlacedOrder> orders, FeatureVector& f) {
    std::size_t n_size = 0, le1 = 0, le5 = 0, le10 = 0, le50 = 0;
    std::size_t n_px = 0, w1 = 0, w5 = 0;
    for (const auto& o : orders) {
        if (o.size <= 100) {
            ++n_size;
            le1 += o.size <= 1;
            le5 += o.size <= 5;
            le10 += o.size <= 10;
            le50 += o.size <= 50;
        }
        if (o.distance_ticks <= 10.0) {
            ++n_px;
            w1 += o.distance_ticks <= 1.0;
            w5 += o.distance_ticks <= 5.0;
        }
    }
    const auto ratio = [](std::size_t k, std::size_t n) {
        return n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n);
    };
    f.size_le_1 = ratio(le1, n_size);
    f.size_le_5 = ratio(le5, n_size);
    f.size_le_10 = ratio(le10, n_size);
    f.size_le_50 = ratio(le50, n_size);
    f.px_within_1 = ratio(w1, n_px);
    f.px_within_5 = ratio(w5, n_px);
}

FeatureVector extract(const sim::OrderStream& s) {
    FeatureVector f;
    fill_return_features(s.mid_per_minute, f);

    const sim::ReplayResult rep = sim::replay(s);
    std::vector<PlacedOrder> orders;
    orders.reserve(rep.mid_before_place.size());
    std::size_t k = 0;
    for (const auto& ev : s.events) {
        if (ev.kind != sim::EventKind::Place) continue;
        orders.push_back(
            PlacedOrder{ev.size, std::abs(static_cast<double>(ev.price) - rep.mid_before_place[k++])});
    }
    fill_order_features(orders, f);
    return f;
}

void FeatureNormalizer::fit(std::span<const FeatureArray> corpus) {
    if (corpus.empty()) throw std::invalid_argument("cannot fit a normalizer on an empty corpus");
    const double n = static_cast<double>(corpus.size());
    FeatureArray mean{}, sd{};
    for (const auto& row : corpus)
        for (std::size_t d = 0; d < kFeatureDims; ++d) mean[d] += row[d];
    for (auto& m : mean) m /= n;
    for (const auto& row : corpus)
        for (std::size_t d = 0; d < kFeatureDims; ++d) sd[d] += (row[d] - mean[d]) * (row[d] - mean[d]);
    for (auto& s : sd) s = std::max(std::sqrt(s / n), kStdFloor);
    set(mean, sd);
}

void FeatureNormalizer::set(const FeatureArray& mean, const FeatureArray& sd) {
    for (double s : sd)
        if (!(s > 0.0)) throw std::invalid_argument("normalizer std must be positive");
    stats_.mean = mean;
    stats_.std = sd;
    fitted_ = true;
}

FeatureArray FeatureNormalizer::normalize(const FeatureArray& x) const {
    FeatureArray z{};
    for (std::size_t d = 0; d < kFeatureDims; ++d) z[d] = (x[d] - stats_.mean[d]) / stats_.std[d];
    return z;
}

FeatureArray FeatureNormalizer::denormalize(const FeatureArray& z) const {
    FeatureArray x{};
    for (std::size_t d = 0; d < kFeatureDims; ++d) x[d] = z[d] * stats_.std[d] + stats_.mean[d];
    return x;
}

double reconstruction_error_z(const FeatureArray& z_hat, const FeatureArray& z_target) {
    double acc = 0;
    for (std::size_t d = 0; d < kFeatureDims; ++d) acc += (z_hat[d] - z_target[d]) * (z_hat[d] - z_target[d]);
    return acc;
}

double reconstruction_error(const FeatureVector& f_hat, const FeatureVector& f_target,
                            const FeatureNormalizer& norm) {
    if (!norm.fitted()) throw std::invalid_argument("reconstruction_error needs a fitted normalizer");
    return reconstruction_error_z(norm.normalize(f_hat.to_array()), norm.normalize(f_target.to_array()));
}

double behavior_variation(const agents::NormBehavior& a, const agents::NormBehavior& b) {
    double acc = 0;
    for (std::size_t i = 0; i < agents::kBehaviorDims; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc;
}

double behavior_variation(const agents::BehaviorVector& a, const agents::BehaviorVector& b) {
    return behavior_variation(a.normalized(), b.normalized());
}

}  // namespace mcal::features
