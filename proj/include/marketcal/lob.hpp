#pragma once

// Price-time priority limit order book. Prices are integer ticks, sizes are
// integer lots. One instance is owned by a single thread.

#include <cstdint>
#include <list>
#include <map>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace mcal::lob {

using OrderId = std::uint64_t;
using Ticks = std::int64_t;
using Lots = std::int64_t;
using AgentIndex = std::int32_t;

enum class Side : std::uint8_t { Bid = 0, Ask = 1 };

inline Side opposite(Side s) { return s == Side::Bid ? Side::Ask : Side::Bid; }
const char* to_string(Side s);

struct LimitOrder {
    OrderId id = 0;
    AgentIndex agent = 0;
    Side side = Side::Bid;
    Ticks price = 0;
    Lots size = 0;
    std::int64_t birth_slot = 0;
};

struct TradeEvent {
    std::int64_t slot = 0;
    OrderId maker = 0;
    OrderId taker = 0;
    AgentIndex maker_agent = 0;
    AgentIndex taker_agent = 0;
    Side taker_side = Side::Bid;
    Ticks price = 0;
    Lots size = 0;
    bool self_trade = false;
};

class DuplicateOrderId : public std::invalid_argument {
public:
    explicit DuplicateOrderId(OrderId id);
    OrderId id;
};

class NoLiquidity : public std::runtime_error {
public:
    NoLiquidity() : std::runtime_error("no liquidity on the opposite side") {}
};

class OrderBook {
public:
    OrderBook(Ticks open_price, double tick_size = 0.01, double lot_size = 1.0);

    /// Matches `order` against the opposite side while it crosses; any
    /// residue rests. Fills execute at the maker's price.
    std::vector<TradeEvent> place_limit(const LimitOrder& order, std::int64_t slot);

    /// Sweeps the opposite side at the best quotes; residue is dropped.
    /// Throws NoLiquidity if the opposite side is empty.
    std::vector<TradeEvent> place_market(OrderId id, Side side, Lots size, AgentIndex agent,
                                         std::int64_t slot);

    bool cancel(OrderId id);

    /// Mid in ticks: quote midpoint, else last trade, else open.
    double mid_price() const;

    std::optional<Ticks> best_bid() const;
    std::optional<Ticks> best_ask() const;
    std::optional<Ticks> last_trade_price() const { return last_trade_; }
    Ticks open_price() const { return open_; }
    double tick_size() const { return tick_size_; }
    double lot_size() const { return lot_size_; }

    bool contains(OrderId id) const { return index_.count(id) != 0; }
    const LimitOrder* find(OrderId id) const;
    std::size_t resting_count() const { return index_.size(); }
    Lots depth(Side side) const;
    /// Resting orders at one price, front of queue first.
    std::vector<LimitOrder> level(Side side, Ticks price) const;

private:
    using Queue = std::list<LimitOrder>;
    using BidLevels = std::map<Ticks, Queue, std::greater<>>;
    using AskLevels = std::map<Ticks, Queue, std::less<>>;

    struct Locator {
        Side side;
        Ticks price;
        Queue::iterator it;
    };

    template <class Levels>
    void match(Levels& levels, LimitOrder& taker, bool is_market, std::int64_t slot,
               std::vector<TradeEvent>& out);
    void rest(const LimitOrder& order);
    void register_id(OrderId id);

    BidLevels bids_;
    AskLevels asks_;
    std::unordered_map<OrderId, Locator> index_;
    std::unordered_set<OrderId> seen_;
    std::optional<Ticks> last_trade_;
    Ticks open_;
    double tick_size_;
    double lot_size_;
};

}  // namespace mcal::lob
