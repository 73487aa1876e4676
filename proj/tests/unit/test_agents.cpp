#include <cmath>

#include "doctest.h"
#include "marketcal/agents.hpp"

using namespace mcal;
using namespace mcal::agents;

TEST_CASE("horizon and risk aversion follow the weight ratio") {
    auto p = make_profile(1.0, 0.0, 0.5, false, 600, 0.01);
    CHECK(p.tau_i == 1200);
    CHECK(p.alpha_i == doctest::Approx(0.02));
    p = make_profile(0.7, 0.7, 0.1, false, 600, 0.01);
    CHECK(p.tau_i == 600);
    CHECK(p.alpha_i == doctest::Approx(0.01));
    CHECK_THROWS(make_profile(0, 0, 0, false, 600, 0.01));

    Rng rng(5);
    for (int k = 0; k < 1000; ++k) {
        const double gf = 3 * uniform01(rng), gc = 3 * uniform01(rng);
        const auto q = make_profile(gf, gc, 0.1, false, 300, 0.01);
        CHECK(q.alpha_i == doctest::Approx(0.01 * (1 + gf) / (1 + gc)).epsilon(1e-14));
        CHECK(q.tau_i == std::max<std::int64_t>(1, std::llround(300 * (1 + gf) / (1 + gc))));
    }
}

TEST_CASE("population draws") {
    PopulationSpec spec;
    spec.n_agents = 2000;
    Rng rng(11);
    auto b = BehaviorVector::from_raw({0.5, 1.0, 1.5, 600, 0.0});
    auto pop = build_population(b, spec, rng);
    REQUIRE(pop.size() == 2000);
    for (const auto& a : pop) {
        CHECK_FALSE(a.profile.institutional);
        CHECK(a.profile.g_f >= 0);
        CHECK(a.profile.g_c >= 0);
        CHECK(a.profile.g_n >= 0);
        CHECK(a.account.cash >= 100 * spec.open_price);
        CHECK(a.account.cash <= 1000 * spec.open_price);
        CHECK(a.account.holdings >= 100);
        CHECK(a.account.holdings <= 1000);
    }
    b.p_inst = 0.5;
    Rng r2(12);
    pop = build_population(b, spec, r2);
    std::size_t inst = 0;
    std::int64_t max_cash = 0;
    for (const auto& a : pop)
        if (a.profile.institutional) {
            ++inst;
            max_cash = std::max(max_cash, a.account.cash);
        }
    CHECK(inst > 850);
    CHECK(inst < 1150);
    CHECK(max_cash > 1000 * spec.open_price);  // doubled range
    CHECK(max_cash <= 2000 * spec.open_price);

    CHECK_THROWS(build_population(BehaviorVector::from_raw({0.01, 1, 1, 600, 0}), spec, rng));
}

TEST_CASE("folded Laplace weights have mean delta") {
    PopulationSpec spec;
    spec.n_agents = 100000;
    for (double d : {0.2, 1.0, 1.8}) {
        Rng rng(derive_seed(3, "lap", static_cast<std::uint64_t>(d * 10)));
        const auto pop = build_population(BehaviorVector::from_raw({d, d, d, 600, 0.1}), spec, rng);
        double sf = 0, sc = 0, sn = 0;
        for (const auto& a : pop) {
            sf += a.profile.g_f;
            sc += a.profile.g_c;
            sn += a.profile.g_n;
        }
        const double n = static_cast<double>(pop.size());
        CHECK(std::abs(sf / n - d) / d < 0.02);
        CHECK(std::abs(sc / n - d) / d < 0.02);
        CHECK(std::abs(sn / n - d) / d < 0.02);
    }
}

TEST_CASE("price estimate branches") {
    Rng rng(1);
    std::vector<double> flat(30, 100.0);
    auto p = make_profile(1, 1, 1, false, 600, 0.01);
    // noise branch is random; with equal weights and all branches at 100 the
    // estimate can only move by the noise draw / 3
    const double e = estimate_price(p, flat, 100.0, 1e-12, rng);
    CHECK(e == doctest::Approx(100.0).epsilon(1e-12));

    p = make_profile(1, 0, 0, false, 600, 0.01);
    CHECK(estimate_price(p, flat, 105.0, 1.0, rng) == 105.0);

    // chartist on an exact ramp: +0.1 per minute, current 100, tau_i = 10 min
    p = make_profile(0, 1, 0, false, 600, 0.01);
    p.tau_i = 600;
    std::vector<double> ramp;
    for (int k = 0; k < 30; ++k) ramp.push_back(100.0 - 0.1 * (29 - k));
    CHECK(estimate_price(p, ramp, 50.0, 1.0, rng) == doctest::Approx(101.0).epsilon(1e-12));

    // cold start: one point, chartist returns the current mid
    std::vector<double> one{97.0};
    CHECK(estimate_price(p, one, 50.0, 1.0, rng) == 97.0);
}

TEST_CASE("noise estimate stays positive") {
    Rng rng(2);
    auto p = make_profile(0, 0, 1, false, 600, 0.01);
    std::vector<double> h{0.01};
    for (int k = 0; k < 1000; ++k) CHECK(estimate_price(p, h, 1.0, 1.0, rng) > 0);
}

TEST_CASE("CARA demand") {
    CHECK(desired_holding(100, 100, 0.1, 4) == 0.0);
    CHECK(desired_holding(110, 100, 0.1, 4) == doctest::Approx(std::log(1.1) / 40).epsilon(1e-14));
    CHECK(desired_holding(110, 100, 0.1, 4) == doctest::Approx(0.0023828).epsilon(1e-4));
    CHECK(desired_holding(100, 105, 0.1, 4) < 0);

    Rng rng(9);
    for (int k = 0; k < 200; ++k) {
        const double ph = 50 + 100 * uniform01(rng), a = 0.01 + uniform01(rng), v = 1e-4 + uniform01(rng);
        // d/dP = (ln(P/p_hat) - 1) / (a v P^2): decreasing only below e * p_hat
        double prev = desired_holding(ph, 0.05 * ph, a, v);
        for (double P = 0.06 * ph; P < 0.999 * std::exp(1.0) * ph; P *= 1.01) {
            const double d = desired_holding(ph, P, a, v);
            CHECK(d < prev);
            prev = d;
        }
        CHECK(desired_holding(ph, 4.0 * ph, a, v) > desired_holding(ph, 3.0 * ph, a, v));
    }
}

TEST_CASE("lot rounding is half-to-even") {
    CHECK(round_lots(2.5) == 2);
    CHECK(round_lots(3.5) == 4);
    CHECK(round_lots(-2.5) == -2);
    CHECK(round_lots(2.4) == 2);
    CHECK(round_lots(-7.6) == -8);
}

TEST_CASE("demand to order") {
    // holdings 10, demand 2.4: round(2.4 - 10) = -8 -> ask 8
    auto o = order_from_demand(2.4, 1000, 10, 1'000'000, 10, 1);
    REQUIRE(o);
    CHECK(o->side == lob::Side::Ask);
    CHECK(o->size == 8);
    // demand equals holdings
    CHECK_FALSE(order_from_demand(10.0, 1000, 10, 1'000'000, 10, 1));
    // broke buyer
    CHECK_FALSE(order_from_demand(50.0, 1000, 10, 0, 10, 1));
    // cash buys 3 lots at 1000 ticks
    o = order_from_demand(50.0, 1000, 10, 3999, 10, 1);
    REQUIRE(o);
    CHECK(o->side == lob::Side::Bid);
    CHECK(o->size == 3);
    // inventory clamp on the ask side
    o = order_from_demand(0.0, 1000, 10, 0, 4, 1);
    REQUIRE(o);
    CHECK(o->size == 4);
}

TEST_CASE("make_order respects budget and inventory; stale orders are cancelled") {
    Rng rng(21);
    std::vector<double> hist;
    for (int k = 0; k < 60; ++k) hist.push_back(10.0 + 0.02 * std::sin(k * 0.3));
    MarketView view;
    view.mid_ticks = 1000;
    view.history = hist;
    for (int k = 0; k < 5000; ++k) {
        const auto prof = make_profile(3 * uniform01(rng), 3 * uniform01(rng), 3 * uniform01(rng) + 1e-3,
                                       false, 60 + 3000 * uniform01(rng), 0.01);
        AgentAccount acc;
        acc.cash = static_cast<std::int64_t>(2e5 * uniform01(rng));
        acc.holdings = static_cast<std::int64_t>(50 * uniform01(rng));
        acc.resting.push_back({1, 0, lob::Side::Bid, 990, 1});
        acc.reserved_cash = std::min<std::int64_t>(acc.cash, 990);
        const std::int64_t slot = 5000;
        const auto req = make_order(0, prof, acc, view, 10.0 + 0.5 * (uniform01(rng) - 0.5), slot, rng);
        const bool stale = slot - 0 > prof.tau_i;
        CHECK((req.cancels.size() == 1) == stale);
        if (!req.order) continue;
        const std::int64_t free_cash = acc.free_cash() + (stale ? 990 : 0);
        if (req.order->side == lob::Side::Bid) CHECK(req.order->price * req.order->size <= free_cash);
        else CHECK(req.order->size <= acc.free_holdings());
        CHECK(req.order->size >= 1);
        CHECK(std::abs(req.order->price - 1000) <= 50);
    }
}

TEST_CASE("behavior vector normalization and validation") {
    const auto b = BehaviorVector::from_raw({0.05, 2.0, 1.025, 1830, 0.25});
    const auto n = b.normalized();
    CHECK(n[0] == doctest::Approx(0.0));
    CHECK(n[1] == doctest::Approx(1.0));
    CHECK(n[2] == doctest::Approx(0.5));
    CHECK(n[3] == doctest::Approx(0.5));
    CHECK(n[4] == doctest::Approx(0.5));
    const auto back = BehaviorVector::from_normalized(n).raw();
    for (std::size_t i = 0; i < 5; ++i) CHECK(back[i] == doctest::Approx(b.raw()[i]).epsilon(1e-12));
    try {
        BehaviorVector::from_raw({1, 1, 1, 10, 0.1}).validate();
        FAIL("expected a bounds error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("tau") != std::string::npos);
    }
}
