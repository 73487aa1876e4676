#include <cmath>

#include "doctest.h"
#include "marketcal/market_state.hpp"
#include "marketcal/rng.hpp"

using namespace mcal;
using namespace mcal::state;

namespace {
std::vector<DailyBar> constant_bars(double c, double range, std::size_t n = 20) {
    return std::vector<DailyBar>(n, DailyBar{c, c + range / 2, c - range / 2, c});
}
}  // namespace

TEST_CASE("trend") {
    CHECK(trend(constant_bars(100, 0)) == 0.0);
    CHECK(trend(constant_bars(100, 2)) == doctest::Approx(0.02).epsilon(1e-14));

    // gap up then back: both days see TR = 4 via the previous close
    auto bars = constant_bars(100, 2);
    bars[18] = {103, 104, 102, 103};
    const double want = (18 * 0.02 + 4.0 / 103 + 4.0 / 100) / 20;
    CHECK(trend(bars) == doctest::Approx(want).epsilon(1e-14));

    std::vector<DailyBar> few(19);
    CHECK_THROWS(trend(few));
}

TEST_CASE("noise") {
    std::vector<double> up;
    for (int i = 0; i < 20; ++i) up.push_back(100 + i * 0.7);
    CHECK(noise(up) == doctest::Approx(0.0).epsilon(1e-15));
    // zig-zag that ends where it started
    std::vector<double> zz;
    for (int i = 0; i < 19; ++i) zz.push_back(i % 2 ? 101.0 : 100.0);
    zz.push_back(100.0);
    CHECK(noise(zz) == doctest::Approx(1.0));
    std::vector<double> flat(20, 5.0);
    CHECK(noise(flat) == 0.0);
    std::vector<double> few(19, 1.0);
    CHECK_THROWS(noise(few));
}

TEST_CASE("trend and noise are scale invariant") {
    Rng rng(4);
    std::vector<DailyBar> bars;
    std::vector<double> closes;
    double p = 50;
    for (int d = 0; d < 25; ++d) {
        const double o = p, c = p * std::exp(0.02 * normal(rng));
        bars.push_back({o, std::max(o, c) * 1.01, std::min(o, c) * 0.99, c});
        closes.push_back(c);
        p = c;
    }
    for (double k : {0.01, 3.0, 1e4}) {
        auto sb = bars;
        auto sc = closes;
        for (auto& b : sb) b = {b.open * k, b.high * k, b.low * k, b.close * k};
        for (auto& c : sc) c *= k;
        CHECK(std::abs(trend(sb) - trend(bars)) < 1e-12);
        CHECK(std::abs(noise(sc) - noise(closes)) < 1e-12);
    }
}

TEST_CASE("bars from mids") {
    std::vector<double> m{10, 12, 9, 11};
    const auto b = bar_from_mids(m);
    CHECK(b.open == 10);
    CHECK(b.high == 12);
    CHECK(b.low == 9);
    CHECK(b.close == 11);
}

TEST_CASE("assembly: monthly macro held flat, missing month named") {
    MacroTable macro;
    macro.add({2020, 1, 1.5, 2.0, 50.1});
    macro.add({2020, 2, 1.7, 2.2, 49.0});
    Calendar cal{2020, 1, 5};
    const auto bars = constant_bars(100, 1);
    const auto a = assemble_raw(0, macro, cal, bars), b = assemble_raw(4, macro, cal, bars);
    CHECK(a == b);
    const auto c = assemble_raw(5, macro, cal, bars);
    CHECK(c[0] == 1.7);
    CHECK(c[2] == 49.0);
    CHECK(c[3] == doctest::Approx(0.01));
    try {
        assemble_raw(10, macro, cal, bars);
        FAIL("expected a missing-month error");
    } catch (const std::out_of_range& e) {
        CHECK(std::string(e.what()).find("2020-03") != std::string::npos);
    }
    CHECK(cal.month_of(12 * 5) == std::pair{2021, 1});
}

TEST_CASE("state normalizer") {
    Rng rng(2);
    std::vector<StateArray> rows(300);
    for (auto& r : rows)
        for (std::size_t d = 0; d < kStateDims; ++d) r[d] = normal(rng, static_cast<double>(d) * 3, 1 + static_cast<double>(d));
    StateNormalizer n;
    n.fit(rows);
    StateArray m{}, v{};
    for (const auto& r : rows) {
        const auto z = n.normalize(r);
        for (std::size_t d = 0; d < kStateDims; ++d) {
            m[d] += z[d] / 300;
            v[d] += z[d] * z[d] / 300;
        }
    }
    for (std::size_t d = 0; d < kStateDims; ++d) {
        CHECK(std::abs(m[d]) < 1e-12);
        CHECK(std::abs(v[d] - 1) < 1e-12);
    }
    const auto back = n.denormalize(n.normalize(rows[7]));
    for (std::size_t d = 0; d < kStateDims; ++d) CHECK(back[d] == doctest::Approx(rows[7][d]));
}
