#pragma once

// Discrete-slot multi-agent market: agents wake per slot, requests are
// batch-executed at slot end in a seeded shuffled order, and everything is
// recorded as an order stream.

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "marketcal/agents.hpp"
#include "marketcal/lob.hpp"

namespace mcal::sim {

inline constexpr std::size_t kFundamentalPoints = 24;
inline constexpr std::size_t kSlotsPerMinute = 60;

struct SimConfig {
    std::int64_t slots_per_day = 14400;
    std::size_t n_agents = 500;
    double wake_prob = 0.01;
    double tick_size = 0.01;
    std::int64_t lot_units = 1;
    lob::Ticks open_price = 1000;
    double alpha_ref = 0.01;
    double lambda_band = 0.05;
    double noise_sd_frac = 0.01;  // noise-trader sd as a fraction of the open
    double variance_floor = 1e-8;
    std::uint64_t rng_seed = 1;
    std::string model_tag = "composite-cara-v1";

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Exogenous fundamental value, piecewise constant over equal intervals.
struct FundamentalSeries {
    std::vector<double> values;  // currency, kFundamentalPoints entries

    void validate() const;
    double at_slot(std::int64_t slot, std::int64_t slots_per_day) const;
    static FundamentalSeries flat(double price);
};

enum class EventKind : std::uint8_t { Place, Cancel, Trade };
const char* to_string(EventKind k);

struct StreamEvent {
    std::int64_t slot = 0;
    std::int64_t seq = 0;
    EventKind kind = EventKind::Place;
    lob::OrderId order_id = 0;  // maker id for trades
    lob::AgentIndex agent = 0;
    lob::Side side = lob::Side::Bid;  // taker side for trades
    lob::Ticks price = 0;
    lob::Lots size = 0;
    lob::OrderId match_id = 0;  // taker id for trades

    bool operator==(const StreamEvent&) const = default;
};

struct StreamMeta {
    lob::Ticks open_price = 1000;
    double tick_size = 0.01;
    std::int64_t lot_units = 1;
    std::int64_t slots_per_day = 14400;
    std::uint64_t seed = 0;

    bool operator==(const StreamMeta&) const = default;
};

struct OrderStream {
    StreamMeta meta;
    std::vector<StreamEvent> events;
    std::vector<double> mid_per_slot;    // ticks, sampled after each slot's batch
    std::vector<double> mid_per_minute;  // ticks, last slot of each minute

    bool operator==(const OrderStream&) const = default;
};

/// Total run_day invocations in this process.
std::uint64_t simulator_calls();

/// Per-caller accounting of simulator invocations.
struct CallCounter {
    std::atomic<std::uint64_t> calls{0};
    std::uint64_t value() const { return calls.load(); }
};

OrderStream run_day(const SimConfig& cfg, const agents::BehaviorVector& b,
                    const FundamentalSeries& fund, CallCounter* counter = nullptr);

/// Mid at each left interval boundary of the day, in currency.
FundamentalSeries fundamental_from_stream(const OrderStream& s);

/// Applies one fill to an account. `side` is the account's side of the trade.
/// A fill that would drive cash or holdings negative is a logic error.
void settle(agents::AgentAccount& account, const lob::TradeEvent& trade, lob::Side side,
            std::int64_t lot_units);

struct ReplayResult {
    std::vector<double> mid_per_slot;
    std::vector<double> mid_before_place;  // one per PLACE event, in stream order
    std::vector<lob::TradeEvent> trades;
};

/// Rebuilds the book from PLACE/CANCEL events alone.
ReplayResult replay(const OrderStream& s);

/// Per-minute series from a per-slot series (last slot of each minute).
std::vector<double> minute_series(const std::vector<double>& per_slot);

}  // namespace mcal::sim
