#include <cmath>

#include "doctest.h"
#include "marketcal/baselines.hpp"

using namespace mcal;
using namespace mcal::baselines;

namespace {

double bowl(const Point& p) {
    double s = 0;
    for (double v : p) s += (v - 0.5) * (v - 0.5);
    return s;
}

BatchScorer counting(std::size_t& calls) {
    return [&calls](const std::vector<Point>& ps) {
        std::vector<double> out;
        for (const auto& p : ps) {
            ++calls;
            out.push_back(bowl(p));
        }
        return out;
    };
}

sim::SimConfig tiny(std::uint64_t seed) {
    sim::SimConfig c;
    c.n_agents = 50;
    c.slots_per_day = 1200;
    c.wake_prob = 0.02;
    c.rng_seed = seed;
    return c;
}

}  // namespace

TEST_CASE("GP reproduces observed values and EI vanishes at the incumbent") {
    Rng rng(3);
    std::vector<Point> x;
    std::vector<double> y;
    for (int i = 0; i < 8; ++i) {
        Point p;
        for (auto& v : p) v = uniform01(rng);
        x.push_back(p);
        y.push_back(bowl(p) + std::sin(3 * p[0]));
    }
    const auto gp = GaussianProcess::fit(x, y, {}, 1e-6);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto pr = gp.predict(x[i]);
        CHECK(std::abs(pr.mean - y[i]) < 1e-3);
        CHECK(pr.var < 1e-3);
    }
    CHECK(expected_improvement(0.4, 0.0, 0.4) == 0.0);
    CHECK(expected_improvement(0.5, 0.0, 0.4) == 0.0);
    CHECK(expected_improvement(0.3, 0.0, 0.4) == doctest::Approx(0.1));
    CHECK(expected_improvement(0.4, 0.01, 0.4) > 0.0);
}

TEST_CASE("GP survives duplicated points") {
    Point p{0.1, 0.2, 0.3, 0.4, 0.5};
    const auto gp = GaussianProcess::fit({p, p, p}, {1.0, 1.0, 1.0}, {}, 1e-6);
    CHECK(std::isfinite(gp.predict(p).mean));
}

TEST_CASE("random search: one trial returns its candidate; calls equal trials") {
    std::size_t calls = 0;
    auto r = random_search(counting(calls), 1, 9);
    CHECK(calls == 1);
    REQUIRE(r.tried.size() == 1);
    CHECK(r.best == r.tried[0]);
    calls = 0;
    r = random_search(counting(calls), 10, 9);
    CHECK(calls == 10);
    CHECK(r.best_score == *std::min_element(r.scores.begin(), r.scores.end()));
    const auto again = random_search(counting(calls), 10, 9);
    CHECK(again.best == r.best);
}

TEST_CASE("bayes opt: exact budget, deterministic") {
    std::size_t calls = 0;
    BayesConfig cfg;
    const auto a = bayes_opt(counting(calls), cfg, 4);
    CHECK(calls == 10);
    CHECK(a.tried.size() == 10);
    const auto b = bayes_opt(counting(calls), cfg, 4);
    CHECK(a.best == b.best);
    cfg.trials = 2;  // fewer than the warm start: all uniform
    calls = 0;
    bayes_opt(counting(calls), cfg, 4);
    CHECK(calls == 2);
    cfg.trials = 0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("bayes opt beats random search on a separable bowl in >= 70% of 50 runs") {
    std::size_t wins = 0, calls = 0;
    for (std::uint64_t s = 1; s <= 50; ++s) {
        const auto bo = bayes_opt(counting(calls), BayesConfig{}, derive_seed(s, "bo"));
        const auto rs = random_search(counting(calls), 10, derive_seed(s, "rs"));
        wins += bo.best_score < rs.best_score;
    }
    MESSAGE("bayes opt won " << wins << " of 50");
    CHECK(wins >= 35);
}

TEST_CASE("simulator scorer: counted calls, common seed, budget helps") {
    features::FeatureNormalizer norm;
    sim::CallCounter calls;
    double mean10 = 0, mean1 = 0;
    for (std::size_t day = 0; day < 20; ++day) {
        DayTarget t;
        t.day = day;
        t.cfg = tiny(derive_seed(5, "target", day));
        t.fund = sim::FundamentalSeries::flat(10.0);
        Rng rng(derive_seed(5, "b", day));
        agents::NormBehavior b{};
        for (auto& v : b) v = uniform01(rng);
        t.target = features::extract(sim::run_day(t.cfg, agents::BehaviorVector::from_normalized(b), t.fund)).to_array();
        t.cfg.rng_seed = derive_seed(5, "search", day);
        auto score = simulator_scorer(t, norm, batch::Exec::Parallel, &calls);
        const auto r10 = random_search(score, 10, derive_seed(7, "rs", day));
        const auto r1 = random_search(score, 1, derive_seed(8, "rs", day));
        mean10 += r10.best_score / 20;
        mean1 += r1.best_score / 20;
        if (day == 0) {
            // same candidate, same seed -> same score, serial or parallel
            auto serial = simulator_scorer(t, norm, batch::Exec::Serial, nullptr);
            CHECK(serial({r10.best})[0] == r10.best_score);
        }
    }
    CHECK(calls.value() == 20 * 11);
    MESSAGE("mean error: 10 trials " << mean10 << ", 1 trial " << mean1);
    CHECK(mean10 <= mean1);
}
