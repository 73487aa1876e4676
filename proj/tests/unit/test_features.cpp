#include <cmath>

#include "checks.hpp"
#include "doctest.h"
#include "marketcal/features.hpp"

using namespace mcal;
using namespace mcal::features;

namespace {

sim::OrderStream flat_stream(std::int64_t slots = 600) {
    sim::OrderStream s;
    s.meta.open_price = 1000;
    s.meta.slots_per_day = slots;
    s.mid_per_slot.assign(static_cast<std::size_t>(slots), 1000.0);
    s.mid_per_minute = sim::minute_series(s.mid_per_slot);
    return s;
}

}  // namespace

TEST_CASE("returns") {
    std::vector<double> flat(5, 100.0);
    for (double r : returns(flat)) CHECK(r == 0.0);
    std::vector<double> two{100.0, 110.0};
    const auto r = returns(two);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(0.0953102).epsilon(1e-6));
    std::vector<double> one{100.0};
    CHECK_THROWS(returns(one));
    std::vector<double> bad{100.0, 0.0};
    CHECK_THROWS(returns(bad));
}

TEST_CASE("hand-built six-order stream") {
    // bids only, so the mid stays at the open (1000); sizes 1/7/60 and
    // distances 1/4/12 ticks, each twice
    auto s = flat_stream();
    const std::array<std::pair<lob::Ticks, lob::Lots>, 6> orders{
        {{999, 1}, {996, 7}, {988, 60}, {999, 1}, {996, 7}, {988, 60}}};
    lob::OrderId id = 1;
    for (const auto& [p, n] : orders) {
        s.events.push_back({static_cast<std::int64_t>(id), 0, sim::EventKind::Place, id, 0, lob::Side::Bid, p, n, 0});
        ++id;
    }
    const auto f = extract(s);
    CHECK(f.size_le_1 == doctest::Approx(1.0 / 3));
    CHECK(f.size_le_5 == doctest::Approx(1.0 / 3));
    CHECK(f.size_le_10 == doctest::Approx(2.0 / 3));
    CHECK(f.size_le_50 == doctest::Approx(2.0 / 3));
    // the 12-tick orders fall outside the window; of the four left, two sit
    // 1 tick away and all four within 5
    CHECK(f.px_within_1 == doctest::Approx(0.5));
    CHECK(f.px_within_5 == doctest::Approx(1.0));
    CHECK(checks::features_agree(f, checks::brute_force_features(s)));
}

TEST_CASE("degenerate and symmetric return series") {
    const auto f = extract(flat_stream());
    CHECK(f.zero_return_ratio == 1.0);
    CHECK(f.gain_loss_ratio == 0.0);
    CHECK(f.vc_1 == 0.0);
    CHECK(f.vc_mean10 == 0.0);
    CHECK(f.kurtosis == 0.0);
    CHECK(f.size_le_1 == 0.0);
    CHECK(f.px_within_1 == 0.0);

    std::vector<double> zig;
    for (int k = 0; k < 41; ++k) zig.push_back(k % 2 ? 101.0 : 100.0);
    FeatureVector g;
    fill_return_features(zig, g);
    CHECK(g.gain_loss_ratio == 1.0);
    CHECK(g.zero_return_ratio == 0.0);
}

TEST_CASE("pearson and kurtosis edge cases") {
    std::vector<double> x{1, 3, 2, 5, 4, 7};
    CHECK(pearson(x, x) == doctest::Approx(1.0));
    std::vector<double> c(6, 2.0);
    CHECK(pearson(x, c) == 0.0);
    CHECK(excess_kurtosis(c) == 0.0);
    // two-point symmetric distribution: kurtosis 1, excess -2
    std::vector<double> pm{1, -1, 1, -1, 1, -1, 1, -1};
    CHECK(excess_kurtosis(pm) == doctest::Approx(-2.0));
}

TEST_CASE("feature oracle on random micro-streams") {
    std::size_t agree = 0, n = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto s = checks::micro_stream(seed);
        std::string why;
        const bool ok = checks::features_agree(extract(s), checks::brute_force_features(s), &why);
        INFO("seed " << seed << ": " << why);
        CHECK(ok);
        agree += ok;
        ++n;
    }
    CHECK(agree == n);
}

TEST_CASE("extract is pure") {
    const auto s = checks::micro_stream(77);
    const auto a = extract(s), b = extract(s);
    CHECK(a == b);
}

TEST_CASE("reconstruction error") {
    FeatureNormalizer norm;
    FeatureArray mean{}, sd{};
    sd.fill(2.0);
    norm.set(mean, sd);
    FeatureVector a, b;
    CHECK(reconstruction_error(a, a, norm) == 0.0);
    b.kurtosis = 2.0;  // one std
    CHECK(reconstruction_error(b, a, norm) == doctest::Approx(1.0));
    b.vc_1 = 4.0;  // two std
    CHECK(reconstruction_error(b, a, norm) == doctest::Approx(5.0));
}

TEST_CASE("behavior variation") {
    agents::NormBehavior a{0.1, 0.2, 0.3, 0.4, 0.5};
    CHECK(behavior_variation(a, a) == 0.0);
    agents::NormBehavior lo{0, 0, 0, 0, 0}, hi{1, 0, 0, 0, 0};
    CHECK(behavior_variation(lo, hi) == doctest::Approx(1.0));
    agents::NormBehavior half{0.5, 0.5, 0.5, 0.5, 0.5};
    CHECK(behavior_variation(lo, half) == doctest::Approx(1.25));
    const auto r0 = agents::BehaviorVector::from_normalized(lo), r1 = agents::BehaviorVector::from_normalized(half);
    CHECK(behavior_variation(r0, r1) == doctest::Approx(1.25));
}

TEST_CASE("normalizer round trip") {
    Rng rng(4);
    std::vector<FeatureArray> corpus(500);
    for (auto& a : corpus)
        for (std::size_t i = 0; i < kFeatureDims; ++i) a[i] = normal(rng, static_cast<double>(i), 0.5 + i);
    corpus[0][5] = 1e9;  // an outlier does not matter for the identity
    FeatureNormalizer norm;
    norm.fit(corpus);
    FeatureArray m{}, v{};
    for (const auto& a : corpus) {
        const auto z = norm.normalize(a);
        for (std::size_t i = 0; i < kFeatureDims; ++i) m[i] += z[i];
    }
    for (auto& x : m) x /= static_cast<double>(corpus.size());
    for (const auto& a : corpus) {
        const auto z = norm.normalize(a);
        for (std::size_t i = 0; i < kFeatureDims; ++i) v[i] += (z[i] - m[i]) * (z[i] - m[i]);
    }
    for (std::size_t i = 0; i < kFeatureDims; ++i) {
        CHECK(std::abs(m[i]) < 1e-9);
        CHECK(std::abs(std::sqrt(v[i] / static_cast<double>(corpus.size())) - 1.0) < 1e-9);
    }
    const auto back = norm.denormalize(norm.normalize(corpus[3]));
    // error scales with the normalizer's own magnitude (the outlier column has
    // mean ~2e6)
    for (std::size_t i = 0; i < kFeatureDims; ++i)
        CHECK(std::abs(back[i] - corpus[3][i]) <= 1e-14 * (std::abs(norm.mean()[i]) + norm.std()[i]) + 1e-15);

    // constant dimension: std floored, z stays finite
    for (auto& a : corpus) a[2] = 3.0;
    norm.fit(corpus);
    CHECK(norm.std()[2] >= FeatureNormalizer::kStdFloor);
    CHECK(std::isfinite(norm.normalize(corpus[0])[2]));
}
