#pragma once

// Heterogeneous agent ecology: composite fundamentalist / chartist / noise
// agents with CARA demand, per-agent horizons and risk aversion.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "marketcal/lob.hpp"
#include "marketcal/rng.hpp"

namespace mcal::agents {

inline constexpr std::size_t kBehaviorDims = 5;
using NormBehavior = std::array<double, kBehaviorDims>;

/// Raw bounds of each behavior coordinate, in field order
/// (delta_f, delta_c, delta_n, tau, p_inst).
struct BehaviorBounds {
    std::array<double, kBehaviorDims> lo{0.05, 0.05, 0.05, 60.0, 0.0};
    std::array<double, kBehaviorDims> hi{2.0, 2.0, 2.0, 3600.0, 0.5};

    void validate() const;
};

const BehaviorBounds& default_bounds();
/// Replaces the process-wide bounds; call before any work starts.
void set_default_bounds(const BehaviorBounds& b);
const std::array<const char*, kBehaviorDims>& behavior_names();

struct BehaviorVector {
    double delta_f = 1.0;
    double delta_c = 1.0;
    double delta_n = 1.0;
    double tau = 600.0;  // reference horizon, slots
    double p_inst = 0.1;

    std::array<double, kBehaviorDims> raw() const { return {delta_f, delta_c, delta_n, tau, p_inst}; }
    static BehaviorVector from_raw(const std::array<double, kBehaviorDims>& r);

    /// Affine map of each coordinate onto [0,1].
    NormBehavior normalized(const BehaviorBounds& bounds = default_bounds()) const;
    static BehaviorVector from_normalized(const NormBehavior& n,
                                          const BehaviorBounds& bounds = default_bounds());

    /// Throws std::invalid_argument naming the offending field.
    void validate(const BehaviorBounds& bounds = default_bounds()) const;

    bool operator==(const BehaviorVector&) const = default;
};

struct AgentProfile {
    double g_f = 0.0;
    double g_c = 0.0;
    double g_n = 0.0;
    std::int64_t tau_i = 1;  // slots
    double alpha_i = 0.1;
    bool institutional = false;
};

struct RestingOrder {
    lob::OrderId id = 0;
    std::int64_t birth_slot = 0;
    lob::Side side = lob::Side::Bid;
    lob::Ticks price = 0;
    lob::Lots remaining = 0;
};

/// Cash is held in integer ticks of currency. Reservations back resting
/// orders so that fills can never overdraw the account.
struct AgentAccount {
    std::int64_t cash = 0;
    std::int64_t holdings = 0;
    std::int64_t reserved_cash = 0;
    std::int64_t reserved_holdings = 0;
    std::vector<RestingOrder> resting;

    std::int64_t free_cash() const { return cash - reserved_cash; }
    std::int64_t free_holdings() const { return holdings - reserved_holdings; }
};

struct Agent {
    AgentProfile profile;
    AgentAccount account;
};

/// Horizon and risk-aversion scaling factor (1 + g_f) / (1 + g_c).
inline double horizon_ratio(double g_f, double g_c) { return (1.0 + g_f) / (1.0 + g_c); }

AgentProfile make_profile(double g_f, double g_c, double g_n, bool institutional, double tau,
                          double alpha_ref);

struct PopulationSpec {
    std::size_t n_agents = 500;
    double alpha_ref = 0.01;
    lob::Ticks open_price = 1000;
    std::int64_t lot_units = 1;
};

std::vector<Agent> build_population(const BehaviorVector& b, const PopulationSpec& spec, Rng& rng);

/// Ordinary least squares line through `points` (x = 0..n-1) evaluated at
/// x = n - 1 + ahead.
double ols_extrapolate(std::span<const double> points, double ahead);

/// Weighted blend of fundamental, chartist and noise estimates. `history`
/// holds per-minute mids in currency with the current mid last.
double estimate_price(const AgentProfile& profile, std::span<const double> history,
                      double fundamental_now, double sigma_noise, Rng& rng);

/// CARA holding demand ln(p_hat / price) / (alpha * variance * price).
double desired_holding(double p_hat, double price, double alpha, double variance);

/// Sample variance of log returns over the trailing window, floored.
double trailing_return_variance(std::span<const double> history, std::size_t window,
                                double floor = 1e-8);

/// Price interval (currency) over which the agent's CARA demand yields a
/// feasible order: from the price at which buying up to the demand would
/// spend all free cash, up to p_hat where the demand reaches zero.
struct PriceRange {
    double lo = 0;
    double hi = 0;
};
PriceRange feasible_price_range(double p_hat, double alpha, double variance, double holdings,
                                double free_cash);

/// Round-half-to-even to whole lots.
std::int64_t round_lots(double x);

struct MarketView {
    double mid_ticks = 0.0;
    std::span<const double> history;  // per-minute mids (currency), current mid last
    double tick_size = 0.01;
    std::int64_t lot_units = 1;
    double lambda = 0.05;
    double sigma_noise = 0.1;  // currency
    double variance_floor = 1e-8;
};

struct OrderIntent {
    lob::Side side = lob::Side::Bid;
    lob::Ticks price = 0;
    lob::Lots size = 0;
};

struct AgentRequest {
    lob::AgentIndex agent = 0;
    std::vector<lob::OrderId> cancels;
    std::optional<OrderIntent> order;
};

/// Turns a holding demand at `price_ticks` into an order: the lot-rounded gap
/// to current holdings, clamped by free cash (bids) or free holdings (asks).
std::optional<OrderIntent> order_from_demand(double pi, lob::Ticks price_ticks,
                                             std::int64_t holdings, std::int64_t free_cash,
                                             std::int64_t free_holdings, std::int64_t lot_units);

/// Window length (in minute points) the agent looks back over.
std::size_t lookback_points(const AgentProfile& profile);

AgentRequest make_order(lob::AgentIndex index, const AgentProfile& profile,
                        const AgentAccount& account, const MarketView& view,
                        double fundamental_now, std::int64_t slot, Rng& rng);

}  // namespace mcal::agents
