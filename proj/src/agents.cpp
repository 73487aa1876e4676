#include "marketcal/agents.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mcal::agents {

namespace {
BehaviorBounds& bounds_storage() {
    static BehaviorBounds bounds{};
    return bounds;
}
}  // namespace

const BehaviorBounds& default_bounds() { return bounds_storage(); }

void set_default_bounds(const BehaviorBounds& b) {
    b.validate();
    bounds_storage() = b;
}

void BehaviorBounds::validate() const {
    for (std::size_t i = 0; i < kBehaviorDims; ++i)
        if (!(lo[i] < hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            throw std::invalid_argument(std::string("bounds.") + behavior_names()[i] + ": need lo < hi");
    if (lo[0] < 0 || lo[1] < 0 || lo[2] < 0) throw std::invalid_argument("bounds: weights must be non-negative");
    if (lo[3] < 1) throw std::invalid_argument("bounds.tau: must be at least one slot");
    if (lo[4] < 0 || hi[4] > 1) throw std::invalid_argument("bounds.p_inst: must lie in [0, 1]");
}

const std::array<const char*, kBehaviorDims>& behavior_names() {
    static const std::array<const char*, kBehaviorDims> names{"delta_f", "delta_c", "delta_n",
                                                              "tau", "p_inst"};
    return names;
}

BehaviorVector BehaviorVector::from_raw(const std::array<double, kBehaviorDims>& r) {
    return BehaviorVector{r[0], r[1], r[2], r[3], r[4]};
}

NormBehavior BehaviorVector::normalized(const BehaviorBounds& bounds) const {
    const auto r = raw();
    NormBehavior out{};
    for (std::size_t i = 0; i < kBehaviorDims; ++i)
        out[i] = (r[i] - bounds.lo[i]) / (bounds.hi[i] - bounds.lo[i]);
    return out;
}

BehaviorVector BehaviorVector::from_normalized(const NormBehavior& n, const BehaviorBounds& bounds) {
    std::array<double, kBehaviorDims> r{};
    for (std::size_t i = 0; i < kBehaviorDims; ++i)
        r[i] = bounds.lo[i] + std::clamp(n[i], 0.0, 1.0) * (bounds.hi[i] - bounds.lo[i]);
    return from_raw(r);
}

void BehaviorVector::validate(const BehaviorBounds& bounds) const {
    const auto r = raw();
    for (std::size_t i = 0; i < kBehaviorDims; ++i) {
        if (!std::isfinite(r[i]) || r[i] < bounds.lo[i] || r[i] > bounds.hi[i])
            throw std::invalid_argument(std::string("behavior field ") + behavior_names()[i] +
                                        " = " + std::to_string(r[i]) + " outside [" +
                                        std::to_string(bounds.lo[i]) + ", " +
                                        std::to_string(bounds.hi[i]) + "]");
    }
}

AgentProfile make_profile(double g_f, double g_c, double g_n, bool institutional, double tau,
                          double alpha_ref) {
    if (g_f < 0 || g_c < 0 || g_n < 0 || !(g_f + g_c + g_n > 0))
        throw std::invalid_argument("agent weights must be non-negative with a positive sum");
    const double ratio = horizon_ratio(g_f, g_c);
    AgentProfile p;
    p.g_f = g_f;
    p.g_c = g_c;
    p.g_n = g_n;
    p.institutional = institutional;
    p.tau_i = std::max<std::int64_t>(1, std::llround(tau * ratio));
    p.alpha_i = alpha_ref * ratio;
    return p;
}

std::vector<Agent> build_population(const BehaviorVector& b, const PopulationSpec& spec, Rng& rng) {
    b.validate();
    if (spec.n_agents < 1) throw std::invalid_argument("n_agents must be at least 1");
    if (spec.open_price < 1) throw std::invalid_argument("open price must be at least one tick");

    // |Laplace(0, d)| is exponential with mean d.
    std::exponential_distribution<double> draw_f(1.0 / b.delta_f);
    std::exponential_distribution<double> draw_c(1.0 / b.delta_c);
    std::exponential_distribution<double> draw_n(1.0 / b.delta_n);
    std::bernoulli_distribution draw_inst(b.p_inst);

    const std::int64_t unit = spec.open_price * spec.lot_units;
    std::vector<Agent> agents;
    agents.reserve(spec.n_agents);
    for (std::size_t i = 0; i < spec.n_agents; ++i) {
        double g_f = 0, g_c = 0, g_n = 0;
        do {
            g_f = draw_f(rng);
            g_c = draw_c(rng);
            g_n = draw_n(rng);
        } while (!(g_f + g_c + g_n > 0));
        const bool inst = draw_inst(rng);
        const std::int64_t scale = inst ? 2 : 1;
        std::uniform_int_distribution<std::int64_t> cash(100 * scale * unit, 1000 * scale * unit);
        std::uniform_int_distribution<std::int64_t> holdings(100 * scale, 1000 * scale);

        Agent a;
        a.profile = make_profile(g_f, g_c, g_n, inst, b.tau, spec.alpha_ref);
        a.account.cash = cash(rng);
        a.account.holdings = holdings(rng);
        agents.push_back(std::move(a));
    }
    return agents;
}

double ols_extrapolate(std::span<const double> points, double ahead) {
    const std::size_t n = points.size();
    if (n == 0) throw std::invalid_argument("ols_extrapolate needs at least one point");
    if (n == 1) return points[0];
    const double xbar = 0.5 * static_cast<double>(n - 1);
    double ybar = 0.0;
    for (double y : points) ybar += y;
    ybar /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - xbar;
        sxy += dx * (points[i] - ybar);
        sxx += dx * dx;
    }
    const double slope = sxy / sxx;
    return ybar + slope * (static_cast<double>(n - 1) + ahead - xbar);
}

std::size_t lookback_points(const AgentProfile& profile) {
    const double minutes = static_cast<double>(profile.tau_i) / 60.0;
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(minutes)) + 1);
}

double estimate_price(const AgentProfile& profile, std::span<const double> history,
                      double fundamental_now, double sigma_noise, Rng& rng) {
    const double wsum = profile.g_f + profile.g_c + profile.g_n;
    if (!(wsum > 0)) throw std::invalid_argument("agent weights sum to zero");
    if (history.empty()) throw std::invalid_argument("estimate_price needs the current mid");
    const double current = history.back();

    double chartist = current;
    if (profile.g_c > 0 && history.size() >= 2) {
        const std::size_t n = std::min(history.size(), lookback_points(profile));
        // never project further ahead than the history the line was fitted on
        const double ahead =
            std::min(static_cast<double>(profile.tau_i) / 60.0, static_cast<double>(n - 1));
        chartist = ols_extrapolate(history.last(n), ahead);
        // an extrapolated crash below zero degrades to the current mid
        if (!(chartist > 0)) chartist = current;
    }

    double noise = current;
    if (profile.g_n > 0) {
        bool drawn = false;
        for (int attempt = 0; attempt < 8; ++attempt) {
            const double x = normal(rng, current, sigma_noise);
            if (x > 0) {
                noise = x;
                drawn = true;
                break;
            }
        }
        if (!drawn) noise = current;
    }

    return (profile.g_f * fundamental_now + profile.g_c * chartist + profile.g_n * noise) / wsum;
}

double desired_holding(double p_hat, double price, double alpha, double variance) {
    return std::log(p_hat / price) / (alpha * variance * price);
}

double trailing_return_variance(std::span<const double> history, std::size_t window,
                                double floor) {
    const std::size_t n = std::min(history.size(), window);
    if (n < 3) return floor;
    const auto pts = history.last(n);
    double mean = 0.0;
    std::vector<double> r(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        r[i - 1] = std::log(pts[i] / pts[i - 1]);
        mean += r[i - 1];
    }
    mean /= static_cast<double>(r.size());
    double var = 0.0;
    for (double x : r) var += (x - mean) * (x - mean);
    var /= static_cast<double>(r.size() - 1);
    return std::max(var, floor);
}

std::int64_t round_lots(double x) {
    constexpr double kLimit = 1e15;
    x = std::clamp(x, -kLimit, kLimit);
    const int mode = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double r = std::nearbyint(x);
    std::fesetround(mode);
    return static_cast<std::int64_t>(r);
}

namespace {

// Largest x in [lo, hi] (log-space bisection) with f(x) >= 0 for a
// decreasing f.
template <class F>
double bisect_decreasing(F f, double lo, double hi) {
    double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < 80; ++i) {
        const double m = 0.5 * (a + b);
        if (f(std::exp(m)) >= 0.0)
            a = m;
        else
            b = m;
    }
    return std::exp(0.5 * (a + b));
}

}  // namespace

PriceRange feasible_price_range(double p_hat, double alpha, double variance, double holdings,
                                double free_cash) {
    if (!(p_hat > 0) || !(alpha > 0) || !(variance > 0))
        throw std::invalid_argument("feasible_price_range needs positive p_hat, alpha, variance");
    const double floor = p_hat * 1e-6;
    double p_star = p_hat;
    if (holdings > 0) {
        p_star = bisect_decreasing(
            [&](double p) { return desired_holding(p_hat, p, alpha, variance) - holdings; }, floor, p_hat);
    }
    double p_low = p_star;
    if (free_cash > 0) {
        // p * (demand(p) - holdings) spends exactly the free cash at p_low
        p_low = bisect_decreasing(
            [&](double p) { return std::log(p_hat / p) / (alpha * variance) - p * holdings - free_cash; },
            floor, p_star);
    }
    return PriceRange{std::min(p_low, p_star), p_hat};
}

std::optional<OrderIntent> order_from_demand(double pi, lob::Ticks price_ticks,
                                             std::int64_t holdings, std::int64_t free_cash,
                                             std::int64_t free_holdings, std::int64_t lot_units) {
    const std::int64_t delta = round_lots(pi - static_cast<double>(holdings));
    lob::Lots size = 0;
    lob::Side side = lob::Side::Bid;
    if (delta > 0) {
        const std::int64_t per_lot = price_ticks * lot_units;
        size = std::min<std::int64_t>(delta, std::max<std::int64_t>(0, free_cash) / per_lot);
    } else if (delta < 0) {
        side = lob::Side::Ask;
        size = std::min<std::int64_t>(-delta, std::max<std::int64_t>(0, free_holdings));
    }
    if (size < 1) return std::nullopt;
    return OrderIntent{side, price_ticks, size};
}

AgentRequest make_order(lob::AgentIndex index, const AgentProfile& profile,
                        const AgentAccount& account, const MarketView& view,
                        double fundamental_now, std::int64_t slot, Rng& rng) {
    AgentRequest req;
    req.agent = index;

    std::int64_t free_cash = account.free_cash();
    std::int64_t free_holdings = account.free_holdings();
    for (const auto& o : account.resting) {
        if (slot - o.birth_slot > profile.tau_i) {
            req.cancels.push_back(o.id);
            if (o.side == lob::Side::Bid)
                free_cash += o.price * o.remaining * view.lot_units;
            else
                free_holdings += o.remaining;
        }
    }

    const double p_hat = estimate_price(profile, view.history, fundamental_now, view.sigma_noise, rng);
    const double variance =
        trailing_return_variance(view.history, lookback_points(profile), view.variance_floor);

    // Account-feasible range, kept inside the band around the current mid.
    const double mid = view.mid_ticks * view.tick_size;
    const double band_lo = mid * (1.0 - view.lambda);
    const double band_hi = mid * (1.0 + view.lambda);
    const PriceRange feasible =
        feasible_price_range(p_hat, profile.alpha_i, variance, static_cast<double>(account.holdings),
                             static_cast<double>(free_cash) * view.tick_size);
    double lo = std::clamp(feasible.lo, band_lo, band_hi);
    double hi = std::clamp(feasible.hi, band_lo, band_hi);
    const double draw = lo + (hi - lo) * uniform01(rng);
    const lob::Ticks price_ticks = std::max<lob::Ticks>(1, std::llround(draw / view.tick_size));
    const double price = static_cast<double>(price_ticks) * view.tick_size;

    const double pi = desired_holding(p_hat, price, profile.alpha_i, variance);
    req.order = order_from_demand(pi, price_ticks, account.holdings, free_cash, free_holdings,
                                  view.lot_units);
    return req;
}

}  // namespace mcal::agents
